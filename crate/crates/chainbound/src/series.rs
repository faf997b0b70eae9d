//! Truncated power series in one variable over [`Scalar`].
//!
//! A `TruncatedSeries` stores the coefficients of degrees `0..=K` and stands
//! for a germ known exactly up to degree `K`. Arithmetic keeps every
//! coefficient up to the common truncation and discards the rest, so binary
//! operations on series truncated at different orders return a series
//! truncated at the smaller one.

use crate::scalar::Scalar;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<Scalar>,
}

impl TruncatedSeries {
    /// Zero series truncated at degree `k`.
    pub fn zeros(k: usize) -> Self {
        Self { coeffs: vec![Scalar::new(0.0, 0.0); k + 1] }
    }

    /// Constant series truncated at degree `k`.
    pub fn constant(value: Scalar, k: usize) -> Self {
        let mut s = Self::zeros(k);
        s.coeffs[0] = value;
        s
    }

    /// Build from explicit coefficients of degrees `0..coeffs.len()`.
    pub fn from_coeffs(coeffs: Vec<Scalar>) -> Self {
        assert!(!coeffs.is_empty(), "a truncated series needs at least the degree-0 coefficient");
        Self { coeffs }
    }

    /// Truncation order `K`; coefficients of degree `> K` are unknown.
    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of degree `k`. Panics past the truncation order.
    pub fn coeff(&self, k: usize) -> Scalar {
        self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn set_coeff(&mut self, k: usize, value: Scalar) {
        self.coeffs[k] = value;
    }

    /// Evaluate at `z` by Horner's rule, treating unknown higher terms as zero.
    pub fn eval(&self, z: Scalar) -> Scalar {
        let mut acc = Scalar::new(0.0, 0.0);
        for &a in self.coeffs.iter().rev() {
            acc = acc * z + a;
        }
        acc
    }

    /// Multiply every coefficient by `t`.
    pub fn scale(&self, t: Scalar) -> Self {
        Self { coeffs: self.coeffs.iter().map(|&a| a * t).collect() }
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    fn common_len(&self, rhs: &Self) -> usize {
        self.coeffs.len().min(rhs.coeffs.len())
    }
}

impl Add for TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: Self) -> Self {
        let n = self.common_len(&rhs);
        let coeffs = (0..n).map(|i| self.coeffs[i] + rhs.coeffs[i]).collect();
        Self { coeffs }
    }
}

impl Sub for TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: Self) -> Self {
        let n = self.common_len(&rhs);
        let coeffs = (0..n).map(|i| self.coeffs[i] - rhs.coeffs[i]).collect();
        Self { coeffs }
    }
}

impl Neg for TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> Self {
        Self { coeffs: self.coeffs.into_iter().map(|a| -a).collect() }
    }
}

impl Mul for TruncatedSeries {
    type Output = TruncatedSeries;
    /// Plain convolution; truncation orders stay small enough here that
    /// anything fancier would not pay for itself.
    fn mul(self, rhs: Self) -> Self {
        let n = self.common_len(&rhs);
        let mut coeffs = vec![Scalar::new(0.0, 0.0); n];
        for (i, &a) in self.coeffs.iter().take(n).enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().take(n - i).enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self { coeffs }
    }
}
