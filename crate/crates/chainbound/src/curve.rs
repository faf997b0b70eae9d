//! Parametrized closed curves: a projection component `z(theta)` that must
//! stay away from the base point `z = 0`, plus `q` fiber components
//! `w_1(theta) .. w_q(theta)` per loop.
//!
//! Loops come either as trigonometric polynomials (sparse frequency maps) or
//! as uniform sample arrays. Sampled loops are interpolated spectrally, so
//! evaluation, differentiation and resampling all act on the discrete Fourier
//! transform of the samples; that keeps the quadrature code oblivious to the
//! representation.

use crate::scalar::{self, Scalar};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;
use thiserror::Error;

/// Loops must keep at least this distance from the base point unless the
/// caller overrides it.
pub const DEFAULT_MIN_BASE_DISTANCE: f64 = 1e-3;

/// Samples per loop required before spectral interpolation makes sense.
pub const MIN_SAMPLES: usize = 16;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("failed to read curve file: {0}")]
    Io(#[from] std::io::Error),
    #[error("curve JSON is malformed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("loop {loop_index}: frequency key {key:?} is not an integer")]
    BadFrequency { loop_index: usize, key: String },
    #[error("loop {loop_index}: component {component} contains a non-finite value")]
    NonFinite { loop_index: usize, component: String },
    #[error("loop {loop_index}: sample count {n} is odd; spectral interpolation needs an even count")]
    OddSampleCount { loop_index: usize, n: usize },
    #[error("loop {loop_index}: only {n} samples, need at least {MIN_SAMPLES}")]
    TooFewSamples { loop_index: usize, n: usize },
    #[error(
        "loop {loop_index} passes within {distance:.3e} of the base point at theta = {theta:.6} \
         (minimum allowed {min_allowed:.3e})"
    )]
    BaseTooClose { loop_index: usize, theta: f64, distance: f64, min_allowed: f64 },
    #[error("loop {loop_index} has {got} fiber components, the curve declares q = {want}")]
    FiberArityMismatch { loop_index: usize, got: usize, want: usize },
    #[error("curve has no loops")]
    Empty,
}

/// One closed scalar-valued component of a loop.
#[derive(Debug, Clone)]
pub enum Parametrization {
    /// Sparse trigonometric polynomial: `sum_f coeffs[f] e^(i f theta)`.
    Fourier(BTreeMap<i32, Scalar>),
    /// Uniform samples at `theta_j = 2 pi j / n` with their normalized DFT;
    /// bin `k` carries frequency `k` for `k < n/2` and `k - n` otherwise.
    Samples { values: Vec<Scalar>, spectrum: Vec<Scalar> },
}

fn bin_frequency(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

fn forward_spectrum(values: &[Scalar]) -> Vec<Scalar> {
    let n = values.len();
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Evaluate a normalized spectrum on the uniform grid of `m` points by
/// zero-padded inverse FFT (exact trigonometric interpolation for `m >= n`).
fn spectrum_to_grid(spectrum: &[Scalar], m: usize) -> Vec<Scalar> {
    let n = spectrum.len();
    let mut padded = vec![Scalar::new(0.0, 0.0); m];
    for (k, &c) in spectrum.iter().enumerate() {
        let f = bin_frequency(k, n);
        let bin = f.rem_euclid(m as i64) as usize;
        padded[bin] += c;
    }
    FftPlanner::new().plan_fft_inverse(m).process(&mut padded);
    padded
}

impl Parametrization {
    pub fn from_fourier(coeffs: BTreeMap<i32, Scalar>) -> Self {
        Parametrization::Fourier(coeffs)
    }

    /// Wrap uniform samples; the count must be even and at least
    /// [`MIN_SAMPLES`]. Validation errors are reported by the caller with its
    /// loop index, hence the bare shapes here.
    pub fn from_samples(values: Vec<Scalar>) -> Result<Self, (usize,)> {
        if values.len() < MIN_SAMPLES || values.len() % 2 != 0 {
            return Err((values.len(),));
        }
        let spectrum = forward_spectrum(&values);
        Ok(Parametrization::Samples { values, spectrum })
    }

    fn is_finite(&self) -> bool {
        match self {
            Parametrization::Fourier(c) => c.values().all(|&v| scalar::is_finite(v)),
            Parametrization::Samples { values, .. } => values.iter().all(|&v| scalar::is_finite(v)),
        }
    }

    /// Value at an arbitrary angle.
    pub fn eval(&self, theta: f64) -> Scalar {
        match self {
            Parametrization::Fourier(coeffs) => coeffs
                .iter()
                .map(|(&f, &c)| c * Scalar::from_polar(1.0, f as f64 * theta))
                .sum(),
            Parametrization::Samples { spectrum, .. } => {
                let n = spectrum.len();
                spectrum
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| c * Scalar::from_polar(1.0, bin_frequency(k, n) as f64 * theta))
                    .sum()
            }
        }
    }

    /// Derivative with respect to `theta` at an arbitrary angle.
    pub fn eval_derivative(&self, theta: f64) -> Scalar {
        match self {
            Parametrization::Fourier(coeffs) => coeffs
                .iter()
                .map(|(&f, &c)| {
                    c * Scalar::new(0.0, f as f64) * Scalar::from_polar(1.0, f as f64 * theta)
                })
                .sum(),
            Parametrization::Samples { spectrum, .. } => {
                let n = spectrum.len();
                spectrum
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| {
                        let f = bin_frequency(k, n) as f64;
                        c * Scalar::new(0.0, f) * Scalar::from_polar(1.0, f * theta)
                    })
                    .sum()
            }
        }
    }

    /// Values on the uniform grid `theta_j = 2 pi j / m`.
    pub fn grid(&self, m: usize) -> Vec<Scalar> {
        self.grid_of(m, false)
    }

    /// Derivative values on the uniform grid of `m` points.
    pub fn derivative_grid(&self, m: usize) -> Vec<Scalar> {
        self.grid_of(m, true)
    }

    fn grid_of(&self, m: usize, derivative: bool) -> Vec<Scalar> {
        match self {
            Parametrization::Fourier(_) => (0..m)
                .map(|j| {
                    let theta = TAU * j as f64 / m as f64;
                    if derivative {
                        self.eval_derivative(theta)
                    } else {
                        self.eval(theta)
                    }
                })
                .collect(),
            Parametrization::Samples { values, spectrum } => {
                let n = spectrum.len();
                if !derivative && m == n {
                    return values.clone();
                }
                if !derivative && m < n && n % m == 0 {
                    let stride = n / m;
                    return (0..m).map(|j| values[j * stride]).collect();
                }
                let source: Vec<Scalar> = if derivative {
                    spectrum
                        .iter()
                        .enumerate()
                        .map(|(k, &c)| c * Scalar::new(0.0, bin_frequency(k, n) as f64))
                        .collect()
                } else {
                    spectrum.to_vec()
                };
                if m >= n {
                    spectrum_to_grid(&source, m)
                } else {
                    (0..m)
                        .map(|j| {
                            let theta = TAU * j as f64 / m as f64;
                            source
                                .iter()
                                .enumerate()
                                .map(|(k, &c)| {
                                    c * Scalar::from_polar(1.0, bin_frequency(k, n) as f64 * theta)
                                })
                                .sum()
                        })
                        .collect()
                }
            }
        }
    }

    /// The same component traversed backwards (`theta -> -theta`).
    pub fn reversed(&self) -> Self {
        match self {
            Parametrization::Fourier(coeffs) => {
                Parametrization::Fourier(coeffs.iter().map(|(&f, &c)| (-f, c)).collect())
            }
            Parametrization::Samples { values, .. } => {
                let n = values.len();
                let rev: Vec<Scalar> = (0..n).map(|j| values[(n - j) % n]).collect();
                let spectrum = forward_spectrum(&rev);
                Parametrization::Samples { values: rev, spectrum }
            }
        }
    }

    /// Multiply the component by a constant.
    pub fn scaled(&self, t: Scalar) -> Self {
        match self {
            Parametrization::Fourier(coeffs) => {
                Parametrization::Fourier(coeffs.iter().map(|(&f, &c)| (f, c * t)).collect())
            }
            Parametrization::Samples { values, spectrum } => Parametrization::Samples {
                values: values.iter().map(|&v| v * t).collect(),
                spectrum: spectrum.iter().map(|&v| v * t).collect(),
            },
        }
    }

    /// A sensible dense-grid size for scanning extrema of this component.
    fn scan_resolution(&self) -> usize {
        match self {
            Parametrization::Fourier(coeffs) => {
                let max_f = coeffs.keys().map(|f| f.unsigned_abs() as usize).max().unwrap_or(0);
                (8 * max_f).max(1024)
            }
            Parametrization::Samples { values, .. } => (4 * values.len()).max(1024),
        }
    }
}

/// Point data returned by [`Loop::eval`].
#[derive(Debug, Clone)]
pub struct LoopPoint {
    pub z: Scalar,
    pub dz: Scalar,
    pub w: Vec<Scalar>,
}

/// Uniform-grid data for one loop, used by the quadrature code.
#[derive(Debug, Clone)]
pub struct LoopGrid {
    pub z: Vec<Scalar>,
    pub dz: Vec<Scalar>,
    pub w: Vec<Vec<Scalar>>,
}

#[derive(Debug, Clone)]
pub struct Loop {
    pub multiplicity: i64,
    pub z: Parametrization,
    pub w: Vec<Parametrization>,
}

impl Loop {
    pub fn eval(&self, theta: f64) -> LoopPoint {
        LoopPoint {
            z: self.z.eval(theta),
            dz: self.z.eval_derivative(theta),
            w: self.w.iter().map(|c| c.eval(theta)).collect(),
        }
    }

    pub fn grid(&self, m: usize) -> LoopGrid {
        LoopGrid {
            z: self.z.grid(m),
            dz: self.z.derivative_grid(m),
            w: self.w.iter().map(|c| c.grid(m)).collect(),
        }
    }

    /// Reverse orientation; moments of the result are the negatives of the
    /// original ones.
    pub fn reversed(&self) -> Self {
        Loop {
            multiplicity: self.multiplicity,
            z: self.z.reversed(),
            w: self.w.iter().map(Parametrization::reversed).collect(),
        }
    }
}

/// A curve: one or more loops sharing the fiber dimension `q`.
#[derive(Debug, Clone)]
pub struct CurveSpec {
    q: usize,
    loops: Vec<Loop>,
}

impl CurveSpec {
    /// Validate and assemble a curve. `min_base_distance` defaults to
    /// [`DEFAULT_MIN_BASE_DISTANCE`] when `None`.
    pub fn new(
        q: usize,
        loops: Vec<Loop>,
        min_base_distance: Option<f64>,
    ) -> Result<Self, CurveError> {
        if loops.is_empty() {
            return Err(CurveError::Empty);
        }
        let delta = min_base_distance.unwrap_or(DEFAULT_MIN_BASE_DISTANCE);
        for (i, lp) in loops.iter().enumerate() {
            if lp.w.len() != q {
                return Err(CurveError::FiberArityMismatch { loop_index: i, got: lp.w.len(), want: q });
            }
            if !lp.z.is_finite() {
                return Err(CurveError::NonFinite { loop_index: i, component: "z".into() });
            }
            for (j, comp) in lp.w.iter().enumerate() {
                if !comp.is_finite() {
                    return Err(CurveError::NonFinite { loop_index: i, component: format!("w[{j}]") });
                }
            }
            let m = lp.z.scan_resolution();
            let grid = lp.z.grid(m);
            let (j_min, dist) = grid
                .iter()
                .enumerate()
                .map(|(j, z)| (j, z.norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            if dist < delta {
                return Err(CurveError::BaseTooClose {
                    loop_index: i,
                    theta: TAU * j_min as f64 / m as f64,
                    distance: dist,
                    min_allowed: delta,
                });
            }
        }
        Ok(Self { q, loops })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn loops(&self) -> &[Loop] {
        &self.loops
    }

    /// Distance from the base point to the curve, scanned on dense grids.
    pub fn min_base_distance(&self) -> f64 {
        self.loops
            .iter()
            .map(|lp| {
                lp.z.grid(lp.z.scan_resolution()).iter().map(|v| v.norm()).fold(f64::MAX, f64::min)
            })
            .fold(f64::MAX, f64::min)
    }

    /// Distance from an arbitrary point to the curve's projection.
    pub fn min_distance_to(&self, z0: Scalar) -> f64 {
        self.loops
            .iter()
            .map(|lp| {
                lp.z.grid(lp.z.scan_resolution())
                    .iter()
                    .map(|z| (z - z0).norm())
                    .fold(f64::MAX, f64::min)
            })
            .fold(f64::MAX, f64::min)
    }

    /// Rotate the projection chart: `z -> e^(i phi) z`, fibers untouched.
    /// Moments transform covariantly, entry `(alpha, k)` picking up
    /// `e^(-i k phi)`.
    pub fn rotate_chart(&self, phi: f64) -> Self {
        let t = Scalar::from_polar(1.0, phi);
        self.scale_chart(t)
    }

    /// Scale the projection chart: `z -> t z` for nonzero `t`.
    pub fn scale_chart(&self, t: Scalar) -> Self {
        let loops = self
            .loops
            .iter()
            .map(|lp| Loop {
                multiplicity: lp.multiplicity,
                z: lp.z.scaled(t),
                w: lp.w.clone(),
            })
            .collect();
        Self { q: self.q, loops }
    }

    pub fn load(path: &Path) -> Result<Self, CurveError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(text: &str) -> Result<Self, CurveError> {
        let doc: CurveDoc = serde_json::from_str(text)?;
        doc.into_curve()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CurveDoc::from_curve(self)).expect("curve serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), CurveError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CurveDoc {
    q: usize,
    loops: Vec<LoopDoc>,
}

#[derive(Serialize, Deserialize)]
struct LoopDoc {
    multiplicity: i64,
    z: ParamDoc,
    w: Vec<ParamDoc>,
}

#[derive(Serialize, Deserialize)]
enum ParamDoc {
    #[serde(rename = "fourier")]
    Fourier(BTreeMap<String, [f64; 2]>),
    #[serde(rename = "samples")]
    Samples(Vec<[f64; 2]>),
}

impl ParamDoc {
    fn into_param(self, loop_index: usize) -> Result<Parametrization, CurveError> {
        match self {
            ParamDoc::Fourier(map) => {
                let mut coeffs = BTreeMap::new();
                for (key, pair) in map {
                    let f: i32 = key
                        .parse()
                        .map_err(|_| CurveError::BadFrequency { loop_index, key: key.clone() })?;
                    coeffs.insert(f, scalar::from_pair(pair));
                }
                Ok(Parametrization::Fourier(coeffs))
            }
            ParamDoc::Samples(pairs) => {
                let values: Vec<Scalar> = pairs.into_iter().map(scalar::from_pair).collect();
                let n = values.len();
                Parametrization::from_samples(values).map_err(|_| {
                    if n % 2 != 0 {
                        CurveError::OddSampleCount { loop_index, n }
                    } else {
                        CurveError::TooFewSamples { loop_index, n }
                    }
                })
            }
        }
    }

    fn from_param(p: &Parametrization) -> Self {
        match p {
            Parametrization::Fourier(coeffs) => ParamDoc::Fourier(
                coeffs.iter().map(|(f, &c)| (f.to_string(), scalar::to_pair(c))).collect(),
            ),
            Parametrization::Samples { values, .. } => {
                ParamDoc::Samples(values.iter().map(|&v| scalar::to_pair(v)).collect())
            }
        }
    }
}

impl CurveDoc {
    fn into_curve(self) -> Result<CurveSpec, CurveError> {
        let mut loops = Vec::with_capacity(self.loops.len());
        for (i, doc) in self.loops.into_iter().enumerate() {
            let z = doc.z.into_param(i)?;
            let w = doc.w.into_iter().map(|d| d.into_param(i)).collect::<Result<Vec<_>, _>>()?;
            loops.push(Loop { multiplicity: doc.multiplicity, z, w });
        }
        CurveSpec::new(self.q, loops, None)
    }

    fn from_curve(curve: &CurveSpec) -> Self {
        CurveDoc {
            q: curve.q,
            loops: curve
                .loops
                .iter()
                .map(|lp| LoopDoc {
                    multiplicity: lp.multiplicity,
                    z: ParamDoc::from_param(&lp.z),
                    w: lp.w.iter().map(ParamDoc::from_param).collect(),
                })
                .collect(),
        }
    }
}

/// Convenience constructors shared by tests and the synthesis module.
pub mod build {
    use super::*;

    /// `z(theta) = center + radius e^(i theta)`.
    pub fn circle(center: Scalar, radius: f64) -> Parametrization {
        let mut coeffs = BTreeMap::new();
        if center.norm() > 0.0 {
            coeffs.insert(0, center);
        }
        coeffs.insert(1, Scalar::new(radius, 0.0));
        Parametrization::Fourier(coeffs)
    }

    /// Sample an arbitrary closed map on `n` uniform angles.
    pub fn sampled(n: usize, f: impl Fn(f64) -> Scalar) -> Parametrization {
        let values = (0..n).map(|j| f(TAU * j as f64 / n as f64)).collect();
        Parametrization::from_samples(values).expect("caller supplies a valid sample count")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    fn unit_circle_graph(f: impl Fn(Scalar) -> Scalar) -> CurveSpec {
        let z = build::circle(c(0.0, 0.0), 1.0);
        let w = build::sampled(64, |theta| f(Scalar::from_polar(1.0, theta)));
        CurveSpec::new(1, vec![Loop { multiplicity: 1, z, w: vec![w] }], None).unwrap()
    }

    #[test]
    fn circle_evaluation_and_derivative() {
        let p = build::circle(c(2.0, 0.0), 1.0);
        let theta = 0.7;
        let z = p.eval(theta);
        let dz = p.eval_derivative(theta);
        assert!((z - (c(2.0, 0.0) + Scalar::from_polar(1.0, theta))).norm() < 1e-14);
        assert!((dz - Scalar::new(0.0, 1.0) * Scalar::from_polar(1.0, theta)).norm() < 1e-14);
    }

    #[test]
    fn sampled_interpolation_matches_smooth_function_off_grid() {
        // z(theta) = exp(cos theta) sampled at 64 points, checked off-grid
        let p = build::sampled(64, |t| c(t.cos().exp(), 0.0));
        for &theta in &[0.123f64, 1.9, 4.56] {
            let want = c(theta.cos().exp(), 0.0);
            assert!((p.eval(theta) - want).norm() < 1e-10, "theta = {theta}");
        }
    }

    #[test]
    fn sampled_derivative_is_spectral() {
        let p = build::sampled(64, |t| c(t.cos(), t.sin()));
        let theta = 0.9f64;
        let want = c(-theta.sin(), theta.cos());
        assert!((p.eval_derivative(theta) - want).norm() < 1e-10);
    }

    #[test]
    fn grid_resampling_agrees_with_direct_evaluation() {
        let p = build::sampled(32, |t| c((2.0 * t).cos(), (3.0 * t).sin()));
        for m in [16, 32, 48, 128] {
            let grid = p.grid(m);
            for (j, &g) in grid.iter().enumerate() {
                let theta = TAU * j as f64 / m as f64;
                assert!((g - p.eval(theta)).norm() < 1e-10, "m = {m}, j = {j}");
            }
        }
    }

    #[test]
    fn reversal_flips_the_parameter() {
        let p = build::sampled(32, |t| Scalar::from_polar(1.0, t) + c(0.2, 0.0));
        let r = p.reversed();
        for &theta in &[0.3, 2.2] {
            assert!((r.eval(theta) - p.eval(-theta)).norm() < 1e-10);
        }
        let q = build::circle(c(0.0, 0.0), 1.0).reversed();
        assert!((q.eval(0.5) - Scalar::from_polar(1.0, -0.5)).norm() < 1e-14);
    }

    #[test]
    fn base_point_proximity_is_an_error() {
        // circle through the base point
        let z = build::circle(c(1.0, 0.0), 1.0);
        let w = build::circle(c(0.0, 0.0), 1.0);
        let err = CurveSpec::new(1, vec![Loop { multiplicity: 1, z, w: vec![w] }], None).unwrap_err();
        match err {
            CurveError::BaseTooClose { loop_index, distance, .. } => {
                assert_eq!(loop_index, 0);
                assert!(distance < 1e-3);
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn fiber_arity_must_match_q() {
        let z = build::circle(c(0.0, 0.0), 1.0);
        let err = CurveSpec::new(2, vec![Loop { multiplicity: 1, z: z.clone(), w: vec![z] }], None)
            .unwrap_err();
        assert!(matches!(err, CurveError::FiberArityMismatch { got: 1, want: 2, .. }));
    }

    #[test]
    fn json_roundtrip_preserves_evaluation() {
        let curve = unit_circle_graph(|z| z * z + z * z * z);
        let text = curve.to_json();
        let back = CurveSpec::from_json(&text).unwrap();
        let a = curve.loops()[0].eval(1.1);
        let b = back.loops()[0].eval(1.1);
        assert!((a.z - b.z).norm() < 1e-12);
        assert!((a.w[0] - b.w[0]).norm() < 1e-12);
    }

    #[test]
    fn json_schema_shapes() {
        let text = r#"{
            "q": 1,
            "loops": [struct]
        }"#;
        assert!(CurveSpec::from_json(text).is_err());

        let good = r#"{
            "q": 1,
            "loops": [
                {
                    "multiplicity": 1,
                    "z": {"fourier": {"0": [0.0, 0.0], "1": [1.0, 0.0]}},
                    "w": [{"fourier": {"2": [1.0, 0.0]}}]
                }
            ]
        }"#;
        let curve = CurveSpec::from_json(good).unwrap();
        assert_eq!(curve.q(), 1);
        let p = curve.loops()[0].eval(0.4);
        assert!((p.w[0] - Scalar::from_polar(1.0, 0.8)).norm() < 1e-14);
    }

    #[test]
    fn odd_sample_count_is_rejected_with_loop_index() {
        let samples: Vec<[f64; 2]> = (0..17)
            .map(|j| {
                let t = TAU * j as f64 / 17.0;
                [2.0 + t.cos(), t.sin()]
            })
            .collect();
        let doc = serde_json::json!({
            "q": 1,
            "loops": [{"multiplicity": 1, "z": {"samples": samples}, "w": [{"fourier": {"0": [1.0, 0.0]}}]}]
        });
        let err = CurveSpec::from_json(&doc.to_string()).unwrap_err();
        assert!(matches!(err, CurveError::OddSampleCount { loop_index: 0, n: 17 }));
    }

    #[test]
    fn chart_rotation_rotates_z_only() {
        let curve = unit_circle_graph(|z| z * z);
        let rotated = curve.rotate_chart(std::f64::consts::FRAC_PI_3);
        let a = curve.loops()[0].eval(0.25);
        let b = rotated.loops()[0].eval(0.25);
        assert!((b.z - a.z * Scalar::from_polar(1.0, std::f64::consts::FRAC_PI_3)).norm() < 1e-12);
        assert!((b.w[0] - a.w[0]).norm() < 1e-14);
    }

    #[test]
    fn min_distance_scans() {
        let curve = unit_circle_graph(|z| z);
        assert!((curve.min_base_distance() - 1.0).abs() < 1e-9);
        assert!((curve.min_distance_to(c(0.3, 0.0)) - 0.7).abs() < 1e-9);
    }
}
