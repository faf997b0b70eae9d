//! Complex scalar type and a few shared numeric helpers.

use num_complex::Complex64;

/// Complex double used throughout. Public entry points reject non-finite
/// values at the boundary so the numerics never see NaN or infinity.
pub type Scalar = Complex64;

/// Shorthand constructor.
#[inline]
pub fn c(re: f64, im: f64) -> Scalar {
    Scalar::new(re, im)
}

/// True when both parts are finite.
#[inline]
pub fn is_finite(v: Scalar) -> bool {
    v.re.is_finite() && v.im.is_finite()
}

/// Serialize a scalar as the `[re, im]` pair used by every JSON interface.
pub fn to_pair(v: Scalar) -> [f64; 2] {
    [v.re, v.im]
}

/// Parse an `[re, im]` pair.
pub fn from_pair(p: [f64; 2]) -> Scalar {
    Scalar::new(p[0], p[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_check() {
        assert!(is_finite(c(1.0, -2.0)));
        assert!(!is_finite(c(f64::NAN, 0.0)));
        assert!(!is_finite(c(0.0, f64::INFINITY)));
    }

    #[test]
    fn pair_roundtrip() {
        let v = c(0.5, -3.25);
        assert_eq!(from_pair(to_pair(v)), v);
    }
}
