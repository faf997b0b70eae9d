//! Power-sum algebra: elementary symmetric functions from power sums,
//! level-l sequence extension and verification, Weierstrass coefficients,
//! and multi-variable moment families with their slice test.
//!
//! Everything is generic over a coefficient [`Ring`] so the same recursions
//! run on plain scalars (values at a point) and on [`TruncatedSeries`]
//! (germs near the base point). The recursions only ever divide by small
//! integers, which is what makes that genericity possible.

use crate::scalar::{self, Scalar};
use crate::series::TruncatedSeries;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NewtonError {
    #[error("hierarchies truncated at {left} and {right} terms cannot be combined")]
    TruncationMismatch { left: usize, right: usize },
    #[error("moment family is missing the entry for {0:?}")]
    MissingEntry(MultiIndex),
    #[error("entry {0:?} does not have {1} components")]
    WrongArity(MultiIndex, usize),
}

/// Commutative ring with enough structure for the power-sum recursions:
/// integer constants, exact division by integers, scalar multiples, and a
/// magnitude for residual reporting.
pub trait Ring:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    /// Additive identity with the same shape as `self`.
    fn zero_like(&self) -> Self;
    /// The integer `n` as a constant with the same shape as `self`.
    fn int_like(&self, n: i64) -> Self;
    /// Division by a nonzero integer.
    fn div_int(&self, n: i64) -> Self;
    /// Multiplication by a complex scalar.
    fn scale(&self, t: Scalar) -> Self;
    /// Largest coefficient magnitude.
    fn max_abs(&self) -> f64;
}

impl Ring for Scalar {
    fn zero_like(&self) -> Self {
        Scalar::new(0.0, 0.0)
    }
    fn int_like(&self, n: i64) -> Self {
        Scalar::new(n as f64, 0.0)
    }
    fn div_int(&self, n: i64) -> Self {
        self / n as f64
    }
    fn scale(&self, t: Scalar) -> Self {
        self * t
    }
    fn max_abs(&self) -> f64 {
        self.norm()
    }
}

impl Ring for TruncatedSeries {
    fn zero_like(&self) -> Self {
        TruncatedSeries::zeros(self.truncation())
    }
    fn int_like(&self, n: i64) -> Self {
        TruncatedSeries::constant(Scalar::new(n as f64, 0.0), self.truncation())
    }
    fn div_int(&self, n: i64) -> Self {
        self.scale(Scalar::new(1.0 / n as f64, 0.0))
    }
    fn scale(&self, t: Scalar) -> Self {
        TruncatedSeries::scale(self, t)
    }
    fn max_abs(&self) -> f64 {
        TruncatedSeries::max_abs(self)
    }
}

/// Elementary symmetric functions `S_1..S_k` of the (unknown) roots whose
/// power sums are `c = [c_1, .., c_k]`, by the classical triangular
/// recursion: `S_k = (-1)^(k+1)/k * (c_k + sum_{j<k} (-1)^j S_j c_{k-j})`.
pub fn elementary_from_power_sums<R: Ring>(c: &[R]) -> Vec<R> {
    let mut s: Vec<R> = Vec::with_capacity(c.len());
    for k in 1..=c.len() {
        let mut acc = c[k - 1].clone();
        for j in 1..k {
            let term = s[j - 1].clone() * c[k - j - 1].clone();
            acc = if j % 2 == 1 { acc - term } else { acc + term };
        }
        let divisor = if k % 2 == 1 { k as i64 } else { -(k as i64) };
        s.push(acc.div_int(divisor));
    }
    s
}

/// Coefficients `(1, -s_1, s_2, .., (-1)^l s_l)` of the monic degree-`l`
/// polynomial whose roots have the given power sums; entry `j` multiplies
/// `t^(l-j)`.
pub fn weierstrass_coeffs(power_sums: &[Scalar]) -> Vec<Scalar> {
    let s = elementary_from_power_sums(power_sums);
    let mut out = Vec::with_capacity(s.len() + 1);
    out.push(Scalar::new(1.0, 0.0));
    for (j, sj) in s.iter().enumerate() {
        out.push(if j % 2 == 0 { -sj } else { *sj });
    }
    out
}

/// A sequence `c_0, c_1, .., c_K` claimed (or constructed) to be the power
/// sums of `level` roots: `c_d = b_1^d + .. + b_level^d` with `c_0 = level`.
#[derive(Debug, Clone)]
pub struct Hierarchy<R> {
    level: usize,
    terms: Vec<R>,
}

/// Outcome of [`Hierarchy::verify`].
#[derive(Debug, Clone)]
pub struct HierarchyReport {
    /// `|c_0 - level|`.
    pub c0_residual: f64,
    /// Residual magnitude of the defining recursion at each index
    /// `k = level+1 ..= K`, in that order.
    pub residuals: Vec<f64>,
    /// Largest residual including the `c_0` check.
    pub max_residual: f64,
    /// `1 +` largest term magnitude; the pass test is relative to this.
    pub scale: f64,
    pub pass: bool,
}

impl<R: Ring> Hierarchy<R> {
    /// Extend the first `l = c.len() >= 1` power sums `c_1..c_l` to a full
    /// level-`l` sequence `c_0..c_k_max` using the recursion
    /// `c_k = s_1 c_(k-1) - s_2 c_(k-2) + .. + (-1)^(l+1) s_l c_(k-l)`.
    ///
    /// This evaluates the forced extension without ever expanding it as a
    /// polynomial in `c_1..c_l`, which keeps the cost polynomial in `k_max`.
    pub fn extend(c: &[R], k_max: usize) -> Self {
        let level = c.len();
        assert!(level >= 1, "use Hierarchy::level_zero for an empty root set");
        assert!(k_max >= level, "cannot truncate a level-{level} sequence below {level} terms");
        let s = elementary_from_power_sums(c);
        let mut terms = Vec::with_capacity(k_max + 1);
        terms.push(c[0].int_like(level as i64));
        terms.extend_from_slice(c);
        for k in level + 1..=k_max {
            let mut acc = s[0].clone() * terms[k - 1].clone();
            for j in 2..=level {
                let term = s[j - 1].clone() * terms[k - j].clone();
                acc = if j % 2 == 1 { acc + term } else { acc - term };
            }
            terms.push(acc);
        }
        Self { level, terms }
    }

    /// The level-0 sequence: identically zero. The zero element must be
    /// supplied because it fixes the shape of every term.
    pub fn level_zero(k_max: usize, zero: R) -> Self {
        let terms = vec![zero; k_max + 1];
        Self { level: 0, terms }
    }

    /// Wrap an existing sequence `c_0..c_K` (for example measured data) so it
    /// can be verified against the claimed level.
    pub fn from_terms(level: usize, terms: Vec<R>) -> Self {
        assert!(terms.len() > level, "need at least terms c_0..c_{level}");
        Self { level, terms }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Terms `c_0..c_K`.
    pub fn terms(&self) -> &[R] {
        &self.terms
    }

    /// Largest index `K` carried by this sequence.
    pub fn k_max(&self) -> usize {
        self.terms.len() - 1
    }

    /// Check the defining recursion at every index `k > level` and the
    /// normalization `c_0 = level`; passes when the largest residual is at
    /// most `tol` times `1 + max |c_d|`.
    pub fn verify(&self, tol: f64) -> HierarchyReport {
        let level = self.level;
        let c0_residual = (self.terms[0].clone() - self.terms[0].int_like(level as i64)).max_abs();
        let mut residuals = Vec::new();
        if level >= 1 && self.terms.len() > level + 1 {
            let s = elementary_from_power_sums(&self.terms[1..=level]);
            for k in level + 1..self.terms.len() {
                let mut acc = self.terms[k].clone();
                for j in 1..=level {
                    let term = s[j - 1].clone() * self.terms[k - j].clone();
                    acc = if j % 2 == 1 { acc - term } else { acc + term };
                }
                residuals.push(acc.max_abs());
            }
        } else if level == 0 {
            residuals.extend(self.terms[1..].iter().map(R::max_abs));
        }
        let scale = 1.0 + self.terms.iter().map(R::max_abs).fold(0.0, f64::max);
        let max_residual = residuals.iter().copied().fold(c0_residual, f64::max);
        HierarchyReport { c0_residual, residuals, max_residual, scale, pass: max_residual <= tol * scale }
    }

    /// Root scaling `b_j -> t b_j`, i.e. `c_d -> t^d c_d`. Keeps the level.
    pub fn scale_by(&self, t: Scalar) -> Self {
        let mut factor = Scalar::new(1.0, 0.0);
        let terms = self
            .terms
            .iter()
            .map(|term| {
                let out = term.scale(factor);
                factor *= t;
                out
            })
            .collect();
        Self { level: self.level, terms }
    }

    /// Disjoint union of root sets: termwise sum, levels add.
    pub fn add(&self, other: &Self) -> Result<Self, NewtonError> {
        if self.terms.len() != other.terms.len() {
            return Err(NewtonError::TruncationMismatch {
                left: self.terms.len(),
                right: other.terms.len(),
            });
        }
        let terms =
            self.terms.iter().zip(&other.terms).map(|(a, b)| a.clone() + b.clone()).collect();
        Ok(Self { level: self.level + other.level, terms })
    }
}

/// Exponent vector of a moment entry; `q` components, compared in graded
/// lexicographic order so map iteration is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

/// Every multi-index with `arity` components and total degree at most
/// `d_max`, in graded lexicographic order.
pub fn multi_indices(arity: usize, d_max: usize) -> Vec<MultiIndex> {
    fn fill(out: &mut Vec<Vec<u32>>, prefix: &mut Vec<u32>, remaining: u32, slots: usize) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for v in (0..=remaining).rev() {
            prefix.push(v);
            fill(out, prefix, remaining - v, slots - 1);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    for d in 0..=d_max as u32 {
        fill(&mut raw, &mut Vec::new(), d, arity);
    }
    let mut out: Vec<MultiIndex> = raw.into_iter().map(MultiIndex).collect();
    out.sort();
    out
}

/// Multinomial coefficient `(|alpha|)! / (alpha_1! .. alpha_q!)`.
pub fn multinomial(alpha: &MultiIndex) -> f64 {
    let mut value: u128 = 1;
    let mut seen: u32 = 0;
    for &a in &alpha.0 {
        for i in 1..=a {
            seen += 1;
            value = value * seen as u128 / i as u128;
        }
    }
    value as f64
}

pub(crate) fn lambda_power(lambda: &[Scalar], alpha: &MultiIndex) -> Scalar {
    let mut p = Scalar::new(1.0, 0.0);
    for (l, &a) in lambda.iter().zip(&alpha.0) {
        p *= l.powu(a);
    }
    p
}

/// Moments indexed by multi-exponent `alpha` with `|alpha| <= d_max`, over
/// any coefficient ring. For `q = 1` this is just the sequence `C_0..C_d`;
/// for `q > 1` the directional slices below reduce it to that case.
#[derive(Debug, Clone)]
pub struct MomentFamily<R> {
    q: usize,
    d_max: usize,
    entries: BTreeMap<MultiIndex, R>,
}

/// Outcome of [`MomentFamily::verify`].
#[derive(Debug, Clone)]
pub struct FamilyReport {
    pub pass: bool,
    /// Largest relative slice residual seen.
    pub worst_residual: f64,
    /// Direction that produced it.
    pub worst_lambda: Vec<Scalar>,
    pub slices_checked: usize,
}

impl<R: Ring> MomentFamily<R> {
    /// Validates completeness: one entry of the right arity for every
    /// multi-index of degree at most `d_max`.
    pub fn new(
        q: usize,
        d_max: usize,
        entries: BTreeMap<MultiIndex, R>,
    ) -> Result<Self, NewtonError> {
        for alpha in multi_indices(q, d_max) {
            match entries.get(&alpha) {
                None => return Err(NewtonError::MissingEntry(alpha)),
                Some(_) if alpha.arity() != q => return Err(NewtonError::WrongArity(alpha, q)),
                Some(_) => {}
            }
        }
        Ok(Self { q, d_max, entries })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    pub fn entry(&self, alpha: &MultiIndex) -> &R {
        &self.entries[alpha]
    }

    /// Directional restriction `C_d(lambda) = sum_(|alpha|=d) multinomial *
    /// lambda^alpha * C_alpha` for `d = 0..=d_max`.
    pub fn slice(&self, lambda: &[Scalar]) -> Vec<R> {
        assert_eq!(lambda.len(), self.q, "direction must have q components");
        let zero = self.entries.values().next().expect("family is never empty").zero_like();
        let mut out = vec![zero; self.d_max + 1];
        for (alpha, value) in &self.entries {
            let weight = Scalar::new(multinomial(alpha), 0.0) * lambda_power(lambda, alpha);
            let d = alpha.degree() as usize;
            out[d] = out[d].clone() + value.scale(weight);
        }
        out
    }

    /// Verify that every directional slice is a level-`level` power-sum
    /// sequence to relative tolerance `tol`.
    pub fn verify(&self, level: usize, lambdas: &[Vec<Scalar>], tol: f64) -> FamilyReport {
        let mut report = FamilyReport {
            pass: true,
            worst_residual: 0.0,
            worst_lambda: Vec::new(),
            slices_checked: 0,
        };
        for lambda in lambdas {
            let hierarchy = Hierarchy::from_terms(level, self.slice(lambda));
            let check = hierarchy.verify(tol);
            let rel = check.max_residual / check.scale;
            report.slices_checked += 1;
            if rel > report.worst_residual {
                report.worst_residual = rel;
                report.worst_lambda = lambda.clone();
            }
            report.pass &= check.pass;
        }
        report
    }
}

/// Default slice directions: the `q` coordinate axes followed by 16
/// pseudo-random vectors in the closed unit polydisc from a seeded generator.
pub fn default_lambdas(q: usize, seed: u64) -> Vec<Vec<Scalar>> {
    let mut out = Vec::with_capacity(q + 16);
    for j in 0..q {
        let mut e = vec![Scalar::new(0.0, 0.0); q];
        e[j] = Scalar::new(1.0, 0.0);
        out.push(e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..16 {
        out.push((0..q).map(|_| unit_disk_sample(&mut rng)).collect());
    }
    out
}

/// Uniform sample from the closed unit disk.
pub(crate) fn unit_disk_sample<T: Rng>(rng: &mut T) -> Scalar {
    let r = rng.gen::<f64>().sqrt();
    let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    scalar::c(r * phi.cos(), r * phi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;
    use proptest::prelude::*;

    /// Oracle: power sums straight from a root multiset.
    fn power_sums(roots: &[Scalar], k_max: usize) -> Vec<Scalar> {
        (0..=k_max)
            .map(|d| roots.iter().map(|b| b.powu(d as u32)).sum::<Scalar>())
            .collect()
    }

    /// Oracle: elementary symmetric functions by subset enumeration.
    fn elementary_brute(roots: &[Scalar], k: usize) -> Scalar {
        let n = roots.len();
        let mut total = c(0.0, 0.0);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let mut prod = c(1.0, 0.0);
            for (i, b) in roots.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    prod *= b;
                }
            }
            total += prod;
        }
        total
    }

    fn reals(vals: &[f64]) -> Vec<Scalar> {
        vals.iter().map(|&v| c(v, 0.0)).collect()
    }

    #[test]
    fn elementary_matches_hand_values() {
        // roots {1, 2}: power sums (3, 5) -> sigma (3, 2)
        let s = elementary_from_power_sums(&reals(&[3.0, 5.0]));
        assert!((s[0] - c(3.0, 0.0)).norm() < 1e-14);
        assert!((s[1] - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn elementary_matches_subset_oracle() {
        let roots = vec![c(0.3, -1.1), c(-0.4, 0.2), c(1.7, 0.6), c(0.0, 0.9), c(-1.2, -0.5)];
        let c_seq = power_sums(&roots, roots.len());
        let s = elementary_from_power_sums(&c_seq[1..]);
        for k in 1..=roots.len() {
            let want = elementary_brute(&roots, k);
            assert!(
                (s[k - 1] - want).norm() <= 1e-12 * (1.0 + want.norm()),
                "sigma_{k} mismatch: {} vs {}",
                s[k - 1],
                want
            );
        }
    }

    #[test]
    fn extend_geometric_sequence() {
        let h = Hierarchy::extend(&reals(&[2.0]), 4);
        let got: Vec<f64> = h.terms().iter().map(|v| v.re).collect();
        assert_eq!(got, vec![1.0, 2.0, 4.0, 8.0, 16.0]);
    }

    #[test]
    fn extend_plus_minus_one() {
        // roots {1, -1}: c_1 = 0, c_2 = 2, then c_3 = 0 and c_4 = 2
        let h = Hierarchy::extend(&reals(&[0.0, 2.0]), 4);
        assert!((h.terms()[3]).norm() < 1e-14);
        assert!((h.terms()[4] - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn extend_level_zero_is_all_zeros() {
        let h = Hierarchy::level_zero(5, c(0.0, 0.0));
        assert_eq!(h.level(), 0);
        assert_eq!(h.terms().len(), 6);
        assert!(h.terms().iter().all(|t| t.norm() == 0.0));
        assert!(h.verify(1e-12).pass);
    }

    #[test]
    fn verify_accepts_true_power_sums() {
        // roots {1, 2, 3}
        let h = Hierarchy::from_terms(3, reals(&[3.0, 6.0, 14.0, 36.0, 98.0]));
        let report = h.verify(1e-8);
        assert!(report.pass);
        assert_eq!(report.max_residual, 0.0);
    }

    #[test]
    fn verify_rejects_broken_sequence() {
        // level 1 forces c_2 = c_1^2 = 4; the residual is exactly 1
        let h = Hierarchy::from_terms(1, reals(&[1.0, 2.0, 5.0]));
        let report = h.verify(1e-8);
        assert!(!report.pass);
        assert!((report.max_residual - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scaling_scales_roots() {
        let h = Hierarchy::extend(&reals(&[3.0]), 3);
        let scaled = h.scale_by(c(2.0, 0.0));
        let want = Hierarchy::extend(&reals(&[6.0]), 3);
        for (a, b) in scaled.terms().iter().zip(want.terms()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(scaled.level(), 1);
    }

    #[test]
    fn addition_unions_roots() {
        let h1 = Hierarchy::extend(&reals(&[1.0]), 4);
        let h2 = Hierarchy::extend(&reals(&[2.0]), 4);
        let sum = h1.add(&h2).unwrap();
        assert_eq!(sum.level(), 2);
        let want = power_sums(&[c(1.0, 0.0), c(2.0, 0.0)], 4);
        for (a, b) in sum.terms().iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(sum.verify(1e-10).pass);
    }

    #[test]
    fn addition_requires_matching_truncation() {
        let h1 = Hierarchy::extend(&reals(&[1.0]), 4);
        let h2 = Hierarchy::extend(&reals(&[2.0]), 5);
        assert!(matches!(h1.add(&h2), Err(NewtonError::TruncationMismatch { .. })));
    }

    #[test]
    fn weierstrass_known_polynomials() {
        // power sums of {1, 2, 3} -> t^3 - 6 t^2 + 11 t - 6
        let coeffs = weierstrass_coeffs(&reals(&[6.0, 14.0, 36.0]));
        let want = [1.0, -6.0, 11.0, -6.0];
        for (a, b) in coeffs.iter().zip(want) {
            assert!((a - c(b, 0.0)).norm() < 1e-12);
        }
        // power sums (0, -8) -> t^2 + 4, roots +-2i
        let coeffs = weierstrass_coeffs(&reals(&[0.0, -8.0]));
        assert!((coeffs[1]).norm() < 1e-14);
        assert!((coeffs[2] - c(4.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn extension_over_series_matches_pointwise_extension() {
        // c_1 = germ of 2 + z, level 1; extension coefficients must agree
        // with scalar extensions evaluated at sample points
        let k_series = 6;
        let mut coeffs = vec![c(0.0, 0.0); k_series + 1];
        coeffs[0] = c(2.0, 0.0);
        coeffs[1] = c(1.0, 0.0);
        let c1 = TruncatedSeries::from_coeffs(coeffs);
        let h = Hierarchy::extend(&[c1.clone()], 5);
        for &z in &[c(0.1, 0.05), c(-0.2, 0.1)] {
            let scalar_h = Hierarchy::extend(&[c1.eval(z)], 5);
            for (term, want) in h.terms().iter().zip(scalar_h.terms()) {
                assert!((term.eval(z) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn family_slice_general_direction() {
        // entries C_alpha = f^a g^b at a point, f = 2, g = -1
        let q = 2;
        let d_max = 3;
        let (f, g) = (c(2.0, 0.0), c(-1.0, 0.0));
        let mut entries = BTreeMap::new();
        for alpha in multi_indices(q, d_max) {
            entries.insert(alpha.clone(), f.powu(alpha.0[0]) * g.powu(alpha.0[1]));
        }
        let family = MomentFamily::new(q, d_max, entries).unwrap();

        // lambda = (1, 1): C_2 = C_20 + 2 C_11 + C_02 = (f + g)^2
        let slice = family.slice(&[c(1.0, 0.0), c(1.0, 0.0)]);
        assert!((slice[2] - (f + g).powu(2)).norm() < 1e-14);

        // every default direction is a level-1 sequence
        let report = family.verify(1, &default_lambdas(q, 7), 1e-10);
        assert!(report.pass, "worst residual {}", report.worst_residual);
        assert_eq!(report.slices_checked, q + 16);
    }

    #[test]
    fn family_detects_perturbed_entry() {
        let q = 1;
        let d_max = 3;
        let f = c(1.3, 0.4);
        let mut entries = BTreeMap::new();
        for alpha in multi_indices(q, d_max) {
            entries.insert(alpha.clone(), f.powu(alpha.0[0]));
        }
        entries.insert(MultiIndex(vec![2]), f.powu(2) + c(1e-2, 0.0));
        let family = MomentFamily::new(q, d_max, entries).unwrap();
        let lambdas = default_lambdas(q, 7);
        let report = family.verify(1, &lambdas, 1e-6);
        assert!(!report.pass);
        // the axis slice sees the raw perturbation
        let axis = Hierarchy::from_terms(1, family.slice(&[c(1.0, 0.0)]));
        let axis_report = axis.verify(1e-6);
        let residual_at_2 = axis_report.residuals[0];
        assert!((residual_at_2 - 1e-2).abs() < 1e-9);
    }

    #[test]
    fn family_requires_complete_rectangle() {
        let mut entries = BTreeMap::new();
        entries.insert(MultiIndex(vec![0]), c(1.0, 0.0));
        entries.insert(MultiIndex(vec![2]), c(1.0, 0.0));
        assert!(matches!(
            MomentFamily::new(1, 2, entries),
            Err(NewtonError::MissingEntry(MultiIndex(idx))) if idx == vec![1]
        ));
    }

    #[test]
    fn multi_index_enumeration_is_graded() {
        let idx = multi_indices(2, 2);
        let degrees: Vec<u32> = idx.iter().map(|a| a.degree()).collect();
        let mut sorted = degrees.clone();
        sorted.sort();
        assert_eq!(degrees, sorted);
        assert_eq!(idx.len(), 6);
    }

    #[test]
    fn multinomial_values() {
        assert_eq!(multinomial(&MultiIndex(vec![1, 1])), 2.0);
        assert_eq!(multinomial(&MultiIndex(vec![2, 0])), 1.0);
        assert_eq!(multinomial(&MultiIndex(vec![2, 1, 1])), 12.0);
    }

    proptest! {
        /// Extension from c_1..c_l reproduces brute-force power sums.
        #[test]
        fn prop_extension_matches_roots(
            parts in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..6)
        ) {
            let roots: Vec<Scalar> = parts.iter().map(|&(re, im)| c(re, im)).collect();
            let k_max = roots.len() + 6;
            let want = power_sums(&roots, k_max);
            let h = Hierarchy::extend(&want[1..=roots.len()], k_max);
            for (a, b) in h.terms().iter().zip(&want) {
                prop_assert!((a - b).norm() <= 1e-9 * (1.0 + b.norm()));
            }
        }

        /// Root scaling commutes with extension (weighted homogeneity).
        #[test]
        fn prop_scaling_commutes_with_extension(
            parts in proptest::collection::vec((-1.5f64..1.5, -1.5f64..1.5), 1..5),
            t_re in -1.5f64..1.5,
            t_im in -1.5f64..1.5,
        ) {
            let roots: Vec<Scalar> = parts.iter().map(|&(re, im)| c(re, im)).collect();
            let t = c(t_re, t_im);
            let k_max = roots.len() + 4;
            let base = power_sums(&roots, k_max);
            let h = Hierarchy::extend(&base[1..=roots.len()], k_max).scale_by(t);
            let scaled_roots: Vec<Scalar> = roots.iter().map(|&b| b * t).collect();
            let want = power_sums(&scaled_roots, k_max);
            for (a, b) in h.terms().iter().zip(&want) {
                prop_assert!((a - b).norm() <= 1e-9 * (1.0 + b.norm()));
            }
        }
    }
}
