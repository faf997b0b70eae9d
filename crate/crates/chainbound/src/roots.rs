//! Roots of complex polynomials: companion-matrix eigenvalues followed by a
//! couple of Newton polishing steps.

use crate::scalar::Scalar;
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RootError {
    #[error("leading coefficient is zero (or negligible against the rest)")]
    LeadingCoefficientZero,
    #[error("eigenvalue iteration failed to converge")]
    EigenFailure,
}

/// Evaluate `p` and `p'` at `t`; `coeffs[j]` multiplies `t^(n-j)`.
pub fn eval_with_derivative(coeffs: &[Scalar], t: Scalar) -> (Scalar, Scalar) {
    let mut p = Scalar::new(0.0, 0.0);
    let mut dp = Scalar::new(0.0, 0.0);
    for &a in coeffs {
        dp = dp * t + p;
        p = p * t + a;
    }
    (p, dp)
}

/// All complex roots of `coeffs[0] t^n + coeffs[1] t^(n-1) + .. + coeffs[n]`,
/// with multiplicity. Degree-0 input has no roots.
pub fn polynomial_roots(coeffs: &[Scalar]) -> Result<Vec<Scalar>, RootError> {
    assert!(!coeffs.is_empty(), "empty coefficient list");
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if coeffs[0].norm() <= 1e-12 * scale {
        return Err(RootError::LeadingCoefficientZero);
    }
    let monic: Vec<Scalar> = coeffs.iter().map(|&a| a / coeffs[0]).collect();
    if n == 1 {
        return Ok(vec![-monic[1]]);
    }

    // companion matrix: ones on the subdiagonal, negated coefficients in the
    // last column, eigenvalues are exactly the roots
    let mut m = DMatrix::<Scalar>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Scalar::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -monic[n - i];
    }
    let schur = m.try_schur(1e-14, 10_000).ok_or(RootError::EigenFailure)?;
    let mut roots: Vec<Scalar> =
        schur.eigenvalues().ok_or(RootError::EigenFailure)?.iter().copied().collect();

    // two Newton steps knock the Schur backward error down to roundoff
    for r in &mut roots {
        for _ in 0..2 {
            let (p, dp) = eval_with_derivative(&monic, *r);
            if dp.norm() > 1e-300 {
                let step = p / dp;
                if step.norm().is_finite() {
                    *r -= step;
                }
            }
        }
    }
    Ok(roots)
}

/// One Newton correction for a root of `coeffs` starting from `t0`; used by
/// the curve trackers that already know a good predictor.
pub fn newton_correct(coeffs: &[Scalar], t0: Scalar, steps: usize) -> Scalar {
    let mut t = t0;
    for _ in 0..steps {
        let (p, dp) = eval_with_derivative(coeffs, t);
        if dp.norm() <= 1e-300 {
            break;
        }
        let step = p / dp;
        if !step.norm().is_finite() {
            break;
        }
        t -= step;
    }
    t
}
