//! Decide whether a closed curve in complex projective space bounds a positive
//! holomorphic 1-chain with a prescribed sheet count over a base point, using
//! only numerically computed moments of the curve, and recover the sheets near
//! the base point when the answer is yes.
//!
//! The pipeline: [`curve`] loads or synthesizes parametrized curves, [`moments`]
//! integrates their moment tables, [`membership`] runs the nonlinear moment
//! test at one level or searches for the minimal level, and [`reconstruct`]
//! turns an accepting verdict into explicit sheet values. [`newton`] holds the
//! power-sum algebra everything else leans on, and [`synth`] generates test
//! curves with known ground truth.

pub mod curve;
pub mod membership;
pub mod moments;
pub mod newton;
pub mod reconstruct;
pub mod roots;
pub mod scalar;
pub mod series;
pub mod synth;

pub use scalar::Scalar;
pub use series::TruncatedSeries;
