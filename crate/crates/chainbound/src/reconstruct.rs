//! Sheet reconstruction near the base point from an accepting verdict.
//!
//! Once a curve is known to bound an `l`-sheeted chain, the sheet values over
//! a point `z` near the base point are the roots of the monic degree-`l`
//! polynomial whose coefficients are elementary symmetric functions of the
//! corrected power sums `C_1(z) .. C_l(z)`. The power sums are evaluated as
//! Cauchy transforms with the measured head swapped for the solved one.

use crate::curve::{CurveSpec, DEFAULT_MIN_BASE_DISTANCE};
use crate::membership::{Status, Tolerances, Verdict};
use crate::moments::{cauchy_transform, compute_moments, MomentError, QuadratureConfig};
use crate::newton::{elementary_from_power_sums, weierstrass_coeffs, MultiIndex};
use crate::roots::{eval_with_derivative, polynomial_roots, RootError};
use crate::scalar::{self, Scalar};
use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error("verdict status is {0:?}, reconstruction needs an accepting verdict")]
    NotBounding(Status),
    #[error("a level-0 chain has no sheets to reconstruct")]
    NoSheets,
    #[error("verdict carries no solved head coefficients")]
    MissingFree,
    #[error("point is {distance:.3e} from the projected curve, need at least {min_allowed:.3e}")]
    PointTooClose { distance: f64, min_allowed: f64 },
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error("sheet polynomial root extraction failed: {0}")]
    Roots(#[from] RootError),
    #[error("sample has {got} values where truth has {want}")]
    CardinalityMismatch { got: usize, want: usize },
}

/// Reconstructed fiber values over one point. For fiber dimension q > 1 the
/// coordinates are reconstructed independently (one multiset per coordinate,
/// sliced along that coordinate axis); cross-coordinate pairing is not
/// attempted.
#[derive(Debug, Clone)]
pub struct SheetSample {
    pub z: Scalar,
    /// `values[j]` holds the `level` sheet values of fiber coordinate `j`,
    /// sorted by argument.
    pub values: Vec<Vec<Scalar>>,
    /// Largest `|P(value)|` over the monic sheet polynomials used.
    pub residual: f64,
    /// Set when `residual` exceeds ten times the accept tolerance.
    pub flagged: bool,
}

impl SheetSample {
    pub fn to_doc(&self) -> SheetDoc {
        SheetDoc {
            z: scalar::to_pair(self.z),
            values: if self.values.len() == 1 {
                serde_json::to_value(
                    self.values[0].iter().map(|&v| scalar::to_pair(v)).collect::<Vec<_>>(),
                )
                .expect("pairs serialize")
            } else {
                serde_json::to_value(
                    self.values
                        .iter()
                        .map(|c| c.iter().map(|&v| scalar::to_pair(v)).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                )
                .expect("pairs serialize")
            },
            residual: self.residual,
            flagged: self.flagged,
        }
    }
}

/// JSON shape of one sample: `values` is a flat list of `[re, im]` pairs for
/// a one-dimensional fiber and a list of such lists otherwise.
#[derive(Serialize, Deserialize)]
pub struct SheetDoc {
    pub z: [f64; 2],
    pub values: serde_json::Value,
    pub residual: f64,
    pub flagged: bool,
}

pub fn samples_to_json(samples: &[SheetSample]) -> String {
    let docs: Vec<SheetDoc> = samples.iter().map(SheetSample::to_doc).collect();
    serde_json::to_string_pretty(&docs).expect("samples serialize")
}

fn axis_index(q: usize, j: usize, d: u32) -> MultiIndex {
    let mut a = vec![0u32; q];
    a[j] = d;
    MultiIndex(a)
}

/// Evaluate the sheet values of the accepted chain over each requested point.
pub fn reconstruct_sheets(
    spec: &CurveSpec,
    verdict: &Verdict,
    points: &[Scalar],
    quad: &QuadratureConfig,
    tol: &Tolerances,
) -> Result<Vec<SheetSample>, ReconstructError> {
    if verdict.status != Status::Bounds {
        return Err(ReconstructError::NotBounding(verdict.status));
    }
    let level = verdict.level;
    if level == 0 {
        return Err(ReconstructError::NoSheets);
    }
    let free = verdict.free.as_ref().ok_or(ReconstructError::MissingFree)?;
    let q = spec.q();
    // the measured heads that get replaced by the solved ones
    let head_table = compute_moments(spec, level, level, quad)?;

    let mut out = Vec::with_capacity(points.len());
    for &z0 in points {
        let distance = spec.min_distance_to(z0);
        if distance < DEFAULT_MIN_BASE_DISTANCE {
            return Err(ReconstructError::PointTooClose {
                distance,
                min_allowed: DEFAULT_MIN_BASE_DISTANCE,
            });
        }
        let mut values = Vec::with_capacity(q);
        let mut residual: f64 = 0.0;
        for j in 0..q {
            let mut power_sums = Vec::with_capacity(level);
            for d in 1..=level {
                let alpha = axis_index(q, j, d as u32);
                let transform = cauchy_transform(spec, &alpha, z0, quad)?;
                let measured_head = head_table
                    .row(&alpha)
                    .expect("head table covers the axis rows")
                    .iter()
                    .take(d + 1)
                    .rev()
                    .fold(Scalar::new(0.0, 0.0), |acc, &c| acc * z0 + c);
                let solved_head = free
                    .head(&alpha)
                    .ok_or(ReconstructError::MissingFree)?
                    .iter()
                    .rev()
                    .fold(Scalar::new(0.0, 0.0), |acc, &c| acc * z0 + c);
                power_sums.push(transform - measured_head + solved_head);
            }
            let poly = weierstrass_coeffs(&power_sums);
            let mut roots = polynomial_roots(&poly)?;
            roots.sort_by(|a, b| {
                a.arg()
                    .partial_cmp(&b.arg())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.norm().partial_cmp(&b.norm()).unwrap_or(std::cmp::Ordering::Equal))
            });
            for &r in &roots {
                let (p, _) = eval_with_derivative(&poly, r);
                residual = residual.max(p.norm());
            }
            values.push(roots);
        }
        let flagged = residual > 10.0 * tol.accept;
        out.push(SheetSample { z: z0, values, residual, flagged });
    }
    Ok(out)
}

/// Power sums of the reconstructed values in one fiber coordinate, useful for
/// consistency checks against the corrected transforms.
pub fn sample_power_sums(sample: &SheetSample, coordinate: usize, level: usize) -> Vec<Scalar> {
    let values = &sample.values[coordinate];
    let mut sums = Vec::with_capacity(level);
    for d in 1..=level {
        sums.push(values.iter().map(|v| v.powu(d as u32)).sum());
    }
    sums
}

/// Elementary symmetric functions of reconstructed values, for cross-checks.
pub fn sample_elementaries(sample: &SheetSample, coordinate: usize) -> Vec<Scalar> {
    let sums = sample_power_sums(sample, coordinate, sample.values[coordinate].len());
    elementary_from_power_sums(&sums)
}

fn matching_distance(got: &[Scalar], want: &[Scalar]) -> Result<f64, ReconstructError> {
    if got.len() != want.len() {
        return Err(ReconstructError::CardinalityMismatch { got: got.len(), want: want.len() });
    }
    let n = got.len();
    if n == 0 {
        return Ok(0.0);
    }
    if n <= 6 {
        let best = (0..n)
            .permutations(n)
            .map(|perm| {
                perm.iter()
                    .enumerate()
                    .map(|(i, &p)| (got[i] - want[p]).norm())
                    .fold(0.0, f64::max)
            })
            .fold(f64::MAX, f64::min);
        return Ok(best);
    }
    // beyond exhaustive reach: pair by sorted order in both lists
    let key = |v: &Scalar| (v.arg(), v.norm());
    let mut a = got.to_vec();
    let mut b = want.to_vec();
    a.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap_or(std::cmp::Ordering::Equal));
    b.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap_or(std::cmp::Ordering::Equal));
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
}

/// Worst optimal-matching distance between reconstructed samples and ground
/// truth value multisets. `truth[i][j]` lists the expected values of fiber
/// coordinate `j` over point `i`.
pub fn compare_to_truth(
    samples: &[SheetSample],
    truth: &[Vec<Vec<Scalar>>],
) -> Result<f64, ReconstructError> {
    if samples.len() != truth.len() {
        return Err(ReconstructError::CardinalityMismatch {
            got: samples.len(),
            want: truth.len(),
        });
    }
    let mut worst: f64 = 0.0;
    for (sample, expect) in samples.iter().zip(truth) {
        if sample.values.len() != expect.len() {
            return Err(ReconstructError::CardinalityMismatch {
                got: sample.values.len(),
                want: expect.len(),
            });
        }
        for (got, want) in sample.values.iter().zip(expect) {
            worst = worst.max(matching_distance(got, want)?);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{build, CurveSpec, Loop, Parametrization};
    use crate::membership::{minimal_level_search, solve_level1, FitConfig};
    use crate::scalar::c;
    use std::collections::BTreeMap;

    fn cubic_graph() -> CurveSpec {
        let z = build::circle(c(0.0, 0.0), 1.0);
        let mut fourier = BTreeMap::new();
        fourier.insert(2, c(1.0, 0.0));
        fourier.insert(3, c(1.0, 0.0));
        let lp = Loop { multiplicity: 1, z, w: vec![Parametrization::Fourier(fourier)] };
        CurveSpec::new(1, vec![lp], None).unwrap()
    }

    fn two_sheet_curve() -> CurveSpec {
        let z = build::circle(c(0.0, 0.0), 1.0);
        let sheet = |sign: f64| {
            build::sampled(256, move |t| {
                let z = Scalar::from_polar(1.0, t);
                c(0.0, sign) * (c(4.0, 0.0) - z).sqrt()
            })
        };
        let loops = vec![
            Loop { multiplicity: 1, z: z.clone(), w: vec![sheet(1.0)] },
            Loop { multiplicity: 1, z, w: vec![sheet(-1.0)] },
        ];
        CurveSpec::new(1, loops, None).unwrap()
    }

    fn accept(spec: &CurveSpec, l_max: usize) -> Verdict {
        let table =
            compute_moments(spec, 2 * l_max + 2, 4 * l_max + 8, &QuadratureConfig::default())
                .unwrap();
        let v = minimal_level_search(&table, l_max, &FitConfig::default(), &Tolerances::default())
            .unwrap();
        assert_eq!(v.status, Status::Bounds);
        v
    }

    #[test]
    fn two_sheet_curve_reconstructs_plus_minus_2i_at_origin() {
        let spec = two_sheet_curve();
        let verdict = accept(&spec, 3);
        assert_eq!(verdict.level, 2);
        let samples = reconstruct_sheets(
            &spec,
            &verdict,
            &[c(0.0, 0.0)],
            &QuadratureConfig::default(),
            &Tolerances::default(),
        )
        .unwrap();
        let truth = vec![vec![vec![c(0.0, 2.0), c(0.0, -2.0)]]];
        assert!(compare_to_truth(&samples, &truth).unwrap() < 1e-6);
        assert!(!samples[0].flagged);
    }

    #[test]
    fn graph_reconstructs_its_function_values() {
        let spec = cubic_graph();
        let verdict = accept(&spec, 2);
        assert_eq!(verdict.level, 1);
        let f = |z: Scalar| z * z + z * z * z;
        let points = [c(0.2, 0.0), c(0.1, 0.3), c(-0.25, -0.1)];
        let samples = reconstruct_sheets(
            &spec,
            &verdict,
            &points,
            &QuadratureConfig::default(),
            &Tolerances::default(),
        )
        .unwrap();
        let truth: Vec<_> = points.iter().map(|&z| vec![vec![f(z)]]).collect();
        assert!(compare_to_truth(&samples, &truth).unwrap() < 1e-8);
        assert!((samples[0].values[0][0] - c(0.048, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn power_sums_match_the_corrected_transforms() {
        let spec = two_sheet_curve();
        let verdict = accept(&spec, 2);
        let z0 = c(0.15, -0.2);
        let samples = reconstruct_sheets(
            &spec,
            &verdict,
            &[z0],
            &QuadratureConfig::default(),
            &Tolerances::default(),
        )
        .unwrap();
        let sums = sample_power_sums(&samples[0], 0, 2);
        // the true chain has C_1 = 0 and C_2 = 2z - 8
        assert!(sums[0].norm() < 1e-5);
        assert!((sums[1] - (z0 * 2.0 - c(8.0, 0.0))).norm() < 1e-5);
    }

    #[test]
    fn level_zero_verdicts_have_no_sheets() {
        let z = build::circle(c(2.0, 0.0), 1.0);
        let w = build::sampled(64, |t| c(2.0, 0.0) + Scalar::from_polar(1.0, t));
        let spec = CurveSpec::new(1, vec![Loop { multiplicity: 1, z, w: vec![w] }], None).unwrap();
        let verdict = accept(&spec, 1);
        assert_eq!(verdict.level, 0);
        let err = reconstruct_sheets(
            &spec,
            &verdict,
            &[c(0.0, 0.0)],
            &QuadratureConfig::default(),
            &Tolerances::default(),
        )
        .unwrap_err();
        assert!(matches!(err, ReconstructError::NoSheets));
    }

    #[test]
    fn points_on_the_curve_are_refused() {
        let spec = cubic_graph();
        let table = compute_moments(&spec, 3, 12, &QuadratureConfig::default()).unwrap();
        let verdict =
            solve_level1(&table, &FitConfig::default(), &Tolerances::default()).unwrap();
        let err = reconstruct_sheets(
            &spec,
            &verdict,
            &[c(0.9999, 0.0)],
            &QuadratureConfig::default(),
            &Tolerances::default(),
        )
        .unwrap_err();
        assert!(matches!(err, ReconstructError::PointTooClose { .. }));
    }

    #[test]
    fn matching_is_order_free_and_metric() {
        let a = vec![c(0.0, 2.0), c(0.0, -2.0)];
        let b = vec![c(0.0, -2.0), c(0.0, 2.0)];
        assert_eq!(matching_distance(&a, &b).unwrap(), 0.0);
        let perturbed = vec![c(0.0, 2.001), c(0.0, -2.0)];
        let d = matching_distance(&a, &perturbed).unwrap();
        assert!((d - 1e-3).abs() < 1e-12);
        assert!(matching_distance(&a, &[c(0.0, 2.0)]).is_err());
    }

    #[test]
    fn two_coordinate_graph_reconstructs_per_axis() {
        let z = build::circle(c(0.0, 0.0), 1.0);
        let f = |z: Scalar| z * z + c(0.5, 0.0);
        let g = |z: Scalar| z * c(0.0, 1.0) - c(0.25, 0.0);
        let w_f = build::sampled(64, move |t| f(Scalar::from_polar(1.0, t)));
        let w_g = build::sampled(64, move |t| g(Scalar::from_polar(1.0, t)));
        let spec =
            CurveSpec::new(2, vec![Loop { multiplicity: 1, z, w: vec![w_f, w_g] }], None).unwrap();
        let table = compute_moments(&spec, 3, 10, &QuadratureConfig::default()).unwrap();
        let verdict = minimal_level_search(
            &table,
            2,
            &FitConfig::default(),
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(verdict.status, Status::Bounds);
        assert_eq!(verdict.level, 1);
        let z0 = c(0.2, 0.1);
        let samples = reconstruct_sheets(
            &spec,
            &verdict,
            &[z0],
            &QuadratureConfig::default(),
            &Tolerances::default(),
        )
        .unwrap();
        let truth = vec![vec![vec![f(z0)], vec![g(z0)]]];
        assert!(compare_to_truth(&samples, &truth).unwrap() < 1e-7);
    }
}
