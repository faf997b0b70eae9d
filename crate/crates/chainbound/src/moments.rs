//! Moment tables of a curve around the base point.
//!
//! Entry `(alpha, k)` is the contour integral of `w^alpha / z^(k+1) dz / (2
//! pi i)` summed over the loops with their multiplicities, i.e. the degree-`k`
//! Taylor coefficient at the base point of the Cauchy transform of `w^alpha`.
//! On uniform periodic grids the trapezoid rule is spectrally accurate, so the
//! integrator just doubles nodes until the table stops moving.

use crate::curve::{CurveSpec, DEFAULT_MIN_BASE_DISTANCE};
use crate::newton::{multi_indices, MultiIndex};
use crate::scalar::{self, Scalar};
use crate::series::TruncatedSeries;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MomentError {
    #[error(
        "entries up to w^{d_max} / z^{k_plus_one} can overflow doubles on this curve \
         (closest approach to base point {min_dist:.3e}, largest fiber value {max_w:.3e})"
    )]
    Overflow { d_max: usize, k_plus_one: usize, min_dist: f64, max_w: f64 },
    #[error("evaluation point is {distance:.3e} from the curve, need at least {min_allowed:.3e}")]
    PointTooClose { distance: f64, min_allowed: f64 },
    #[error("failed to read moment table: {0}")]
    Io(#[from] std::io::Error),
    #[error("moment table JSON is malformed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("table entries do not cover the declared index rectangle: missing {0:?}")]
    Incomplete(MultiIndex),
}

/// Node ladder for the adaptive trapezoid rule.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    /// Starting node count.
    pub n0: usize,
    /// Hard cap on nodes; hitting it flags the table as unconverged.
    pub n_max: usize,
    /// Stop once one doubling changes no entry by more than `tol` relative
    /// to the largest entry magnitude.
    pub tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { n0: 64, n_max: 1 << 16, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentDiagnostics {
    pub nodes: usize,
    pub last_change: f64,
    pub converged: bool,
    /// Distance from the base point to the curve; downstream normalization
    /// leans on this, so it travels with the table.
    pub min_base_distance: f64,
}

impl Default for MomentDiagnostics {
    fn default() -> Self {
        Self { nodes: 0, last_change: 0.0, converged: true, min_base_distance: 1.0 }
    }
}

/// Complete rectangle of moments `|alpha| <= d_max`, `0 <= k <= k_max`.
#[derive(Debug, Clone)]
pub struct MomentTable {
    q: usize,
    d_max: usize,
    k_max: usize,
    rows: BTreeMap<MultiIndex, Vec<Scalar>>,
    diagnostics: MomentDiagnostics,
}

impl MomentTable {
    pub fn from_rows(
        q: usize,
        d_max: usize,
        k_max: usize,
        rows: BTreeMap<MultiIndex, Vec<Scalar>>,
        diagnostics: MomentDiagnostics,
    ) -> Result<Self, MomentError> {
        for alpha in multi_indices(q, d_max) {
            match rows.get(&alpha) {
                Some(row) if row.len() == k_max + 1 => {}
                _ => return Err(MomentError::Incomplete(alpha)),
            }
        }
        Ok(Self { q, d_max, k_max, rows, diagnostics })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn diagnostics(&self) -> &MomentDiagnostics {
        &self.diagnostics
    }

    /// Row of Taylor coefficients `A_0(alpha) .. A_kmax(alpha)`.
    pub fn row(&self, alpha: &MultiIndex) -> Option<&[Scalar]> {
        self.rows.get(alpha).map(Vec::as_slice)
    }

    pub fn entry(&self, alpha: &MultiIndex, k: usize) -> Option<Scalar> {
        self.rows.get(alpha).and_then(|row| row.get(k).copied())
    }

    /// All rows in multi-index order.
    pub fn rows(&self) -> impl Iterator<Item = (&MultiIndex, &[Scalar])> {
        self.rows.iter().map(|(alpha, row)| (alpha, row.as_slice()))
    }

    /// Net winding of the projected curve around the base point, `A_0(0)`.
    pub fn winding(&self) -> Scalar {
        let zero = MultiIndex(vec![0; self.q]);
        self.rows[&zero][0]
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.rows.values().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn load(path: &Path) -> Result<Self, MomentError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(text: &str) -> Result<Self, MomentError> {
        let doc: TableDoc = serde_json::from_str(text)?;
        let mut rows: BTreeMap<MultiIndex, Vec<Scalar>> = BTreeMap::new();
        for alpha in multi_indices(doc.q, doc.dmax) {
            rows.insert(alpha, vec![Scalar::new(0.0, 0.0); doc.kmax + 1]);
        }
        for e in doc.entries {
            let alpha = MultiIndex(e.alpha);
            let row = rows.get_mut(&alpha).ok_or(MomentError::Incomplete(alpha))?;
            if e.k >= row.len() {
                return Err(MomentError::Incomplete(MultiIndex(vec![])));
            }
            row[e.k] = scalar::from_pair(e.value);
        }
        Self::from_rows(doc.q, doc.dmax, doc.kmax, rows, doc.diagnostics)
    }

    pub fn to_json(&self) -> String {
        let entries = self
            .rows
            .iter()
            .flat_map(|(alpha, row)| {
                row.iter().enumerate().map(move |(k, &v)| EntryDoc {
                    alpha: alpha.0.clone(),
                    k,
                    value: scalar::to_pair(v),
                })
            })
            .collect();
        let doc = TableDoc {
            q: self.q,
            dmax: self.d_max,
            kmax: self.k_max,
            entries,
            diagnostics: self.diagnostics.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("table serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), MomentError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TableDoc {
    q: usize,
    dmax: usize,
    kmax: usize,
    entries: Vec<EntryDoc>,
    #[serde(default)]
    diagnostics: MomentDiagnostics,
}

#[derive(Serialize, Deserialize)]
struct EntryDoc {
    alpha: Vec<u32>,
    k: usize,
    value: [f64; 2],
}

fn guard_overflow(spec: &CurveSpec, d_max: usize, k_max: usize) -> Result<f64, MomentError> {
    let min_dist = spec.min_base_distance();
    let mut max_w: f64 = 1.0;
    for lp in spec.loops() {
        for comp in &lp.w {
            for v in comp.grid(256) {
                max_w = max_w.max(v.norm());
            }
        }
    }
    let log_bound = d_max as f64 * max_w.max(1.0).ln() + (k_max + 1) as f64 * (1.0 / min_dist).ln();
    if log_bound > 600.0 {
        return Err(MomentError::Overflow { d_max, k_plus_one: k_max + 1, min_dist, max_w });
    }
    Ok(min_dist)
}

fn eval_rows(spec: &CurveSpec, alphas: &[MultiIndex], k_max: usize, n: usize) -> Vec<Vec<Scalar>> {
    let mut rows = vec![vec![Scalar::new(0.0, 0.0); k_max + 1]; alphas.len()];
    for lp in spec.loops() {
        let grid = lp.grid(n);
        // (1/2 pi i) * (2 pi / n) = 1 / (i n), times the loop multiplicity
        let weight = Scalar::new(0.0, -(lp.multiplicity as f64) / n as f64);
        let mut factors = vec![Scalar::new(0.0, 0.0); k_max + 1];
        for j in 0..n {
            let inv_z = Scalar::new(1.0, 0.0) / grid.z[j];
            let mut f = grid.dz[j] * inv_z * weight;
            for slot in factors.iter_mut() {
                *slot = f;
                f *= inv_z;
            }
            for (a, alpha) in alphas.iter().enumerate() {
                let mut wa = Scalar::new(1.0, 0.0);
                for (comp, &e) in grid.w.iter().zip(&alpha.0) {
                    if e > 0 {
                        wa *= comp[j].powu(e);
                    }
                }
                let row = &mut rows[a];
                for (slot, &factor) in row.iter_mut().zip(&factors) {
                    *slot += wa * factor;
                }
            }
        }
    }
    rows
}

/// Integrate the complete moment rectangle `|alpha| <= d_max`, `k <= k_max`.
/// Non-convergence at the node cap is reported in the diagnostics rather than
/// as an error so callers can still inspect the table.
pub fn compute_moments(
    spec: &CurveSpec,
    d_max: usize,
    k_max: usize,
    config: &QuadratureConfig,
) -> Result<MomentTable, MomentError> {
    let min_dist = guard_overflow(spec, d_max, k_max)?;
    let alphas = multi_indices(spec.q(), d_max);
    let mut n = config.n0.max(4);
    let mut prev = eval_rows(spec, &alphas, k_max, n);
    let (mut converged, mut last_change);
    loop {
        n = (n * 2).min(config.n_max);
        let next = eval_rows(spec, &alphas, k_max, n);
        let mut change: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for (pr, nr) in prev.iter().zip(&next) {
            for (&a, &b) in pr.iter().zip(nr) {
                change = change.max((a - b).norm());
                scale = scale.max(b.norm());
            }
        }
        last_change = change;
        prev = next;
        converged = change <= config.tol * scale;
        if converged || n >= config.n_max {
            break;
        }
    }
    let rows = alphas.into_iter().zip(prev).collect();
    let diagnostics =
        MomentDiagnostics { nodes: n, last_change, converged, min_base_distance: min_dist };
    MomentTable::from_rows(spec.q(), d_max, k_max, rows, diagnostics)
}

/// Cauchy transform of `w^alpha` at a point `z0` off the curve:
/// `(1/2 pi i) * integral of w^alpha / (zeta - z0) d zeta`.
pub fn cauchy_transform(
    spec: &CurveSpec,
    alpha: &MultiIndex,
    z0: Scalar,
    config: &QuadratureConfig,
) -> Result<Scalar, MomentError> {
    let distance = spec.min_distance_to(z0);
    if distance < DEFAULT_MIN_BASE_DISTANCE {
        return Err(MomentError::PointTooClose {
            distance,
            min_allowed: DEFAULT_MIN_BASE_DISTANCE,
        });
    }
    let eval = |n: usize| -> Scalar {
        let mut total = Scalar::new(0.0, 0.0);
        for lp in spec.loops() {
            let grid = lp.grid(n);
            let weight = Scalar::new(0.0, -(lp.multiplicity as f64) / n as f64);
            let mut acc = Scalar::new(0.0, 0.0);
            for j in 0..n {
                let mut wa = Scalar::new(1.0, 0.0);
                for (comp, &e) in grid.w.iter().zip(&alpha.0) {
                    if e > 0 {
                        wa *= comp[j].powu(e);
                    }
                }
                acc += wa * grid.dz[j] / (grid.z[j] - z0);
            }
            total += acc * weight;
        }
        total
    };
    let mut n = config.n0.max(4);
    let mut value = eval(n);
    loop {
        n = (n * 2).min(config.n_max);
        let next = eval(n);
        let change = (next - value).norm();
        value = next;
        if change <= config.tol * (1.0 + value.norm()) || n >= config.n_max {
            break;
        }
    }
    Ok(value)
}

/// Taylor coefficients of the Cauchy transform of `w^alpha` with the head
/// (degrees `0..=|alpha|`) zeroed out. The head is exactly the part a free
/// degree-`|alpha|` polynomial can absorb, so only this tail carries
/// information about what the curve bounds.
#[derive(Debug, Clone)]
pub struct CanonicalSeries {
    pub alpha: MultiIndex,
    series: TruncatedSeries,
}

impl CanonicalSeries {
    pub fn series(&self) -> &TruncatedSeries {
        &self.series
    }
}

/// Extract the canonical (head-suppressed) series of one moment row.
pub fn canonical_series(table: &MomentTable, alpha: &MultiIndex) -> Option<CanonicalSeries> {
    let row = table.row(alpha)?;
    let head_len = alpha.degree() as usize + 1;
    let coeffs = row
        .iter()
        .enumerate()
        .map(|(k, &v)| if k < head_len { Scalar::new(0.0, 0.0) } else { v })
        .collect();
    Some(CanonicalSeries { alpha: alpha.clone(), series: TruncatedSeries::from_coeffs(coeffs) })
}
