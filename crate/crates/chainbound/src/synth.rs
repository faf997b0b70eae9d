//! Synthetic test curves with known ground truth.
//!
//! Three families: graphs of rational functions over a circle (bounding with
//! one sheet per traversal, or zero sheets when the circle avoids the base
//! point), boundaries of algebraic curves `Q(z, w) = 0` tracked around a
//! circle (bounding with `deg_w Q` sheets), and transcendental graphs that
//! bound nothing at any small level. Sums of corpora realize additivity.

use crate::curve::{build, CurveError, CurveSpec, Loop, Parametrization};
use crate::roots::{newton_correct, polynomial_roots, RootError};
use crate::scalar::{c, Scalar};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Samples per tracked circle traversal in emitted loops.
pub const EMIT_SAMPLES: usize = 4096;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("a pole of the function sits within {distance:.3e} of the circle")]
    PoleNearCircle { distance: f64 },
    #[error("could not locate the poles of the function: {0}")]
    PoleSearch(RootError),
    #[error("leading coefficient in w vanishes on the circle (theta = {theta:.4})")]
    LeadingCoefficientVanishes { theta: f64 },
    #[error("two branches collide on the circle (theta = {theta:.4}, separation {separation:.3e})")]
    BranchPointNearCircle { theta: f64, separation: f64 },
    #[error("branch tracking failed to close up: {detail}")]
    TrackingFailed { detail: String },
    #[error("fiber over the base point is degenerate (separation {separation:.3e})")]
    DegenerateFiber { separation: f64 },
    #[error("summands have fiber dimensions {0} and {1}")]
    MixedFiberDimensions(usize, usize),
    #[error("multiplicity must be at least 1, got {0}")]
    BadMultiplicity(i64),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("root extraction failed while seeding the tracker: {0}")]
    Roots(#[from] RootError),
}

#[derive(Debug, Clone, Copy)]
pub struct Circle {
    pub center: Scalar,
    pub radius: f64,
}

impl Circle {
    pub fn unit() -> Self {
        Self { center: c(0.0, 0.0), radius: 1.0 }
    }

    fn at(&self, theta: f64) -> Scalar {
        self.center + Scalar::from_polar(self.radius, theta)
    }

    fn contains_origin(&self) -> bool {
        self.center.norm() < self.radius * (1.0 - 1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Graph,
    Algebraic,
    Reversed,
    Transcendental,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    /// Bounds with this minimal sheet count.
    Level(usize),
    /// Bounds at no level up to and including this one.
    NoneUpTo(usize),
    /// The configuration has no declared truth; only an oracle run decides.
    OracleOnly,
}

type Evaluator = Box<dyn Fn(Scalar) -> Vec<Scalar> + Send + Sync>;

/// Sixteen deterministic probe points with `|z| <= 0.3` (two rings of
/// eight), used to record reference sheet values in truth sidecars.
pub fn reference_points() -> Vec<Scalar> {
    let mut out = Vec::with_capacity(16);
    for (ring, &r) in [0.15, 0.3].iter().enumerate() {
        for j in 0..8 {
            let theta = std::f64::consts::TAU * (j as f64 + 0.5 * ring as f64) / 8.0;
            out.push(Scalar::from_polar(r, theta));
        }
    }
    out
}

/// Ground-truth sheet values recorded at the [`reference_points`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthSamples {
    pub points: Vec<[f64; 2]>,
    pub values: Vec<Vec<[f64; 2]>>,
}

/// What the generator knows about a curve it produced.
pub struct GroundTruth {
    pub kind: Kind,
    pub expected: Expected,
    evaluator: Option<Evaluator>,
    /// Reference sheet values from a parsed sidecar, when not backed by a
    /// live evaluator.
    stored_samples: Option<TruthSamples>,
}

impl std::fmt::Debug for GroundTruth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GroundTruth")
            .field("kind", &self.kind)
            .field("expected", &self.expected)
            .field("has_evaluator", &self.evaluator.is_some())
            .finish()
    }
}

impl GroundTruth {
    fn new(kind: Kind, expected: Expected, evaluator: Option<Evaluator>) -> Self {
        if let (Expected::Level(l), Some(eval)) = (&expected, &evaluator) {
            debug_assert_eq!(eval(c(0.0, 0.0)).len(), *l, "evaluator cardinality equals level");
        }
        Self { kind, expected, evaluator, stored_samples: None }
    }

    /// Ground-truth fiber values over `z`, when the curve bounds.
    pub fn sheets_at(&self, z: Scalar) -> Option<Vec<Scalar>> {
        self.evaluator.as_ref().map(|eval| eval(z))
    }

    /// Reference sheet values at the standard probe points: freshly evaluated
    /// when a live evaluator is available, otherwise whatever a parsed
    /// sidecar carried.
    pub fn samples(&self) -> Option<TruthSamples> {
        if let Some(eval) = &self.evaluator {
            let mut points = Vec::new();
            let mut values = Vec::new();
            for z in reference_points() {
                let v = eval(z);
                if v.iter().all(|s| s.re.is_finite() && s.im.is_finite()) {
                    points.push([z.re, z.im]);
                    values.push(v.iter().map(|s| [s.re, s.im]).collect());
                }
            }
            return Some(TruthSamples { points, values });
        }
        self.stored_samples.clone()
    }

    pub fn to_json(&self) -> String {
        let expected_level = match self.expected {
            Expected::Level(l) => serde_json::json!(l),
            Expected::NoneUpTo(l) => serde_json::json!(format!("none<={l}")),
            Expected::OracleOnly => serde_json::json!("oracle-only"),
        };
        let mut doc = serde_json::json!({
            "kind": self.kind,
            "expected_level": expected_level,
        });
        if let Some(samples) = self.samples() {
            doc["samples"] = serde_json::to_value(&samples).expect("samples serialize");
        }
        serde_json::to_string_pretty(&doc).expect("truth serializes")
    }

    /// Parse a truth sidecar; the sheet evaluator is not serializable, so
    /// only recorded reference samples come back.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        #[derive(Deserialize)]
        struct Doc {
            kind: Kind,
            expected_level: serde_json::Value,
            samples: Option<TruthSamples>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        let expected = match &doc.expected_level {
            serde_json::Value::Number(n) => {
                Expected::Level(n.as_u64().unwrap_or_default() as usize)
            }
            serde_json::Value::String(s) => {
                if let Some(rest) = s.strip_prefix("none<=") {
                    Expected::NoneUpTo(rest.parse().unwrap_or(0))
                } else {
                    Expected::OracleOnly
                }
            }
            _ => Expected::OracleOnly,
        };
        Ok(Self { kind: doc.kind, expected, evaluator: None, stored_samples: doc.samples })
    }
}

/// Rational function as numerator and denominator coefficients in ascending
/// powers of `z`.
#[derive(Debug, Clone)]
pub struct Rational {
    pub num: Vec<Scalar>,
    pub den: Vec<Scalar>,
}

impl Rational {
    pub fn polynomial(coeffs: Vec<Scalar>) -> Self {
        Self { num: coeffs, den: vec![c(1.0, 0.0)] }
    }

    pub fn eval(&self, z: Scalar) -> Scalar {
        horner(&self.num, z) / horner(&self.den, z)
    }

    fn poles(&self) -> Result<Vec<Scalar>, SynthError> {
        let descending: Vec<Scalar> =
            self.den.iter().rev().copied().skip_while(|v| v.norm() == 0.0).collect();
        if descending.is_empty() {
            return Err(SynthError::PoleSearch(RootError::LeadingCoefficientZero));
        }
        if descending.len() == 1 {
            return Ok(Vec::new());
        }
        polynomial_roots(&descending).map_err(SynthError::PoleSearch)
    }
}

fn horner(coeffs: &[Scalar], z: Scalar) -> Scalar {
    coeffs.iter().rev().fold(c(0.0, 0.0), |acc, &a| acc * z + a)
}

fn circle_fourier(circle: &Circle, winding: u32) -> Parametrization {
    let mut f = BTreeMap::new();
    f.insert(0, circle.center);
    f.insert(winding as i32, c(circle.radius, 0.0));
    Parametrization::Fourier(f)
}

/// Graph of a rational function over a circle. The truth is declared when it
/// is forced: `multiplicity` sheets when the circle encloses the base point
/// and the function is pole-free on the closed disk, zero sheets when the
/// disk avoids the base point, reversal of a sheeted case bounds nothing.
pub fn graph_boundary(
    f: &Rational,
    circle: Circle,
    orientation: i64,
    multiplicity: i64,
) -> Result<(CurveSpec, GroundTruth), SynthError> {
    if multiplicity < 1 {
        return Err(SynthError::BadMultiplicity(multiplicity));
    }
    let poles = f.poles()?;
    let mut min_circle_gap = f64::MAX;
    let mut pole_inside = false;
    for p in &poles {
        let r = (p - circle.center).norm();
        min_circle_gap = min_circle_gap.min((r - circle.radius).abs());
        if r < circle.radius {
            pole_inside = true;
        }
    }
    if min_circle_gap < 1e-3 * circle.radius {
        return Err(SynthError::PoleNearCircle { distance: min_circle_gap });
    }
    let w = build::sampled(EMIT_SAMPLES, |t| f.eval(circle.at(t)));
    let mut lp = Loop { multiplicity, z: circle_fourier(&circle, 1), w: vec![w] };
    if orientation < 0 {
        lp = lp.reversed();
    }
    let spec = CurveSpec::new(1, vec![lp], None)?;

    let forward_level = if pole_inside {
        None
    } else if circle.contains_origin() {
        Some(multiplicity as usize)
    } else {
        Some(0)
    };
    let truth = match (orientation < 0, forward_level) {
        (_, None) => GroundTruth::new(Kind::Graph, Expected::OracleOnly, None),
        (false, Some(0)) | (true, Some(0)) => {
            GroundTruth::new(Kind::Graph, Expected::Level(0), Some(Box::new(|_| Vec::new())))
        }
        (false, Some(l)) => {
            let g = f.clone();
            GroundTruth::new(
                Kind::Graph,
                Expected::Level(l),
                Some(Box::new(move |z| vec![g.eval(z); l])),
            )
        }
        (true, Some(_)) => GroundTruth::new(Kind::Reversed, Expected::NoneUpTo(4), None),
    };
    Ok((spec, truth))
}

/// Bivariate polynomial `Q(z, w) = sum_i w_coeffs[i](z) w^i` with the
/// `z`-polynomials in ascending powers.
#[derive(Debug, Clone)]
pub struct BivariatePoly {
    pub w_coeffs: Vec<Vec<Scalar>>,
}

impl BivariatePoly {
    pub fn degree_w(&self) -> usize {
        self.w_coeffs.len().saturating_sub(1)
    }

    /// Coefficients of `Q(z, .)` in descending powers of `w`.
    fn fiber_poly(&self, z: Scalar) -> Vec<Scalar> {
        self.w_coeffs.iter().rev().map(|p| horner(p, z)).collect()
    }
}

fn min_separation(values: &[Scalar]) -> f64 {
    let mut sep = f64::MAX;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            sep = sep.min((values[i] - values[j]).norm());
        }
    }
    sep
}

/// One tracking step from `theta0` to `theta1`, recursively bisected when the
/// branches move too far relative to their separation.
fn advance_branches(
    q: &BivariatePoly,
    circle: &Circle,
    roots: &mut [Scalar],
    theta0: f64,
    theta1: f64,
    depth: usize,
) -> Result<(), SynthError> {
    let poly = q.fiber_poly(circle.at(theta1));
    let corrected: Vec<Scalar> =
        roots.iter().map(|&r| newton_correct(&poly, r, 3)).collect();
    let motion = roots
        .iter()
        .zip(&corrected)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let separation = min_separation(&corrected);
    if separation < 1e-9 {
        return Err(SynthError::BranchPointNearCircle { theta: theta1, separation });
    }
    if separation < 10.0 * motion {
        if depth >= 24 {
            return Err(SynthError::TrackingFailed {
                detail: format!("step refinement exhausted near theta = {theta1:.4}"),
            });
        }
        let mid = 0.5 * (theta0 + theta1);
        advance_branches(q, circle, roots, theta0, mid, depth + 1)?;
        return advance_branches(q, circle, roots, mid, theta1, depth + 1);
    }
    roots.copy_from_slice(&corrected);
    Ok(())
}

/// Boundary of the algebraic curve `Q(z, w) = 0` over a circle: tracks all
/// `deg_w Q` branches around the circle and assembles one closed loop per
/// monodromy orbit. The truth is `deg_w Q * multiplicity` sheets when the
/// circle encloses the base point and no branch escapes over the closed disk.
pub fn algebraic_boundary(
    q: &BivariatePoly,
    circle: Circle,
    multiplicity: i64,
) -> Result<(CurveSpec, GroundTruth), SynthError> {
    if multiplicity < 1 {
        return Err(SynthError::BadMultiplicity(multiplicity));
    }
    let m = q.degree_w();
    if m == 0 {
        return Err(SynthError::TrackingFailed { detail: "polynomial is constant in w".into() });
    }
    // degenerate fibers over the base point make the sheet count ill defined
    if circle.contains_origin() {
        let base_roots = polynomial_roots(&q.fiber_poly(c(0.0, 0.0)))?;
        if base_roots.len() < m {
            return Err(SynthError::DegenerateFiber { separation: 0.0 });
        }
        let separation = min_separation(&base_roots);
        if m > 1 && separation < 1e-6 {
            return Err(SynthError::DegenerateFiber { separation });
        }
    }

    let start = polynomial_roots(&q.fiber_poly(circle.at(0.0)))?;
    if start.len() < m {
        return Err(SynthError::LeadingCoefficientVanishes { theta: 0.0 });
    }
    let mut roots = start.clone();
    let mut path: Vec<Vec<Scalar>> = vec![Vec::with_capacity(EMIT_SAMPLES); m];
    for (branch, &r) in roots.iter().enumerate() {
        path[branch].push(r);
    }
    let step = 2.0 * std::f64::consts::PI / EMIT_SAMPLES as f64;
    for j in 1..=EMIT_SAMPLES {
        let theta0 = step * (j - 1) as f64;
        let theta1 = step * j as f64;
        advance_branches(q, &circle, &mut roots, theta0, theta1, 0)?;
        if j < EMIT_SAMPLES {
            for (branch, &r) in roots.iter().enumerate() {
                path[branch].push(r);
            }
        }
    }
    // monodromy: match the end of each branch to the start root it landed on
    let mut perm = vec![usize::MAX; m];
    for (branch, &end) in roots.iter().enumerate() {
        let (nearest, distance) = start
            .iter()
            .enumerate()
            .map(|(i, &s)| (i, (end - s).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .expect("at least one branch");
        if distance > 1e-8 {
            return Err(SynthError::TrackingFailed {
                detail: format!("branch {branch} misses every start root by {distance:.3e}"),
            });
        }
        perm[branch] = nearest;
    }
    {
        let mut seen = vec![false; m];
        for &p in &perm {
            if p == usize::MAX || seen[p] {
                return Err(SynthError::TrackingFailed {
                    detail: "monodromy matching is not a permutation".into(),
                });
            }
            seen[p] = true;
        }
    }

    let mut assigned = vec![false; m];
    let mut loops = Vec::new();
    for seed in 0..m {
        if assigned[seed] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut at = seed;
        loop {
            assigned[at] = true;
            cycle.push(at);
            at = perm[at];
            if at == seed {
                break;
            }
        }
        let mut w_samples = Vec::with_capacity(EMIT_SAMPLES * cycle.len());
        for &branch in &cycle {
            w_samples.extend_from_slice(&path[branch]);
        }
        let w = Parametrization::from_samples(w_samples).map_err(|(n,)| {
            SynthError::TrackingFailed { detail: format!("assembled loop has {n} samples") }
        })?;
        loops.push(Loop {
            multiplicity,
            z: circle_fourier(&circle, cycle.len() as u32),
            w: vec![w],
        });
    }
    let spec = CurveSpec::new(1, loops, None)?;

    let truth = if !circle.contains_origin() {
        GroundTruth::new(Kind::Algebraic, Expected::Level(0), Some(Box::new(|_| Vec::new())))
    } else {
        // a branch escapes to infinity over the disk iff the leading
        // w-coefficient vanishes there; detect by a winding count
        let leading: Vec<Scalar> = q.w_coeffs[m].clone();
        let escapes = polynomial_escape_inside(&leading, &circle)?;
        if escapes {
            GroundTruth::new(Kind::Algebraic, Expected::OracleOnly, None)
        } else {
            let level = m * multiplicity as usize;
            let poly = q.clone();
            let mult = multiplicity as usize;
            GroundTruth::new(
                Kind::Algebraic,
                Expected::Level(level),
                Some(Box::new(move |z| {
                    let roots = polynomial_roots(&poly.fiber_poly(z)).unwrap_or_default();
                    let mut out = Vec::with_capacity(roots.len() * mult);
                    for _ in 0..mult {
                        out.extend_from_slice(&roots);
                    }
                    out
                })),
            )
        }
    };
    Ok((spec, truth))
}

/// Does this polynomial vanish anywhere inside the circle?
fn polynomial_escape_inside(coeffs: &[Scalar], circle: &Circle) -> Result<bool, SynthError> {
    let descending: Vec<Scalar> =
        coeffs.iter().rev().copied().skip_while(|v| v.norm() == 0.0).collect();
    if descending.len() <= 1 {
        return Ok(descending.is_empty() || descending[0].norm() == 0.0);
    }
    let zeros = polynomial_roots(&descending)?;
    Ok(zeros.iter().any(|z| (z - circle.center).norm() < circle.radius))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranscendentalKind {
    /// `w(theta) = exp(cos theta)` over the unit circle.
    ExpCos,
    /// `w = exp(z + 1/z)` restricted to `|z| = 1`.
    ExpZPlusInvZ,
}

/// Real-analytic graphs with no holomorphic extension to any chain: these
/// bound nothing at any level the table can test.
pub fn transcendental_boundary(kind: TranscendentalKind) -> (CurveSpec, GroundTruth) {
    let w = match kind {
        TranscendentalKind::ExpCos => build::sampled(512, |t| c(t.cos().exp(), 0.0)),
        TranscendentalKind::ExpZPlusInvZ => build::sampled(512, |t| {
            let z = Scalar::from_polar(1.0, t);
            (z + z.inv()).exp()
        }),
    };
    let lp = Loop { multiplicity: 1, z: circle_fourier(&Circle::unit(), 1), w: vec![w] };
    let spec = CurveSpec::new(1, vec![lp], None).expect("unit circle graph is valid");
    (spec, GroundTruth::new(Kind::Transcendental, Expected::NoneUpTo(4), None))
}

/// Disjoint union of two corpora; expected levels add when both are known to
/// bound, and the sheet multisets concatenate.
pub fn sum_boundaries(
    a: (CurveSpec, GroundTruth),
    b: (CurveSpec, GroundTruth),
) -> Result<(CurveSpec, GroundTruth), SynthError> {
    let (spec_a, truth_a) = a;
    let (spec_b, truth_b) = b;
    if spec_a.q() != spec_b.q() {
        return Err(SynthError::MixedFiberDimensions(spec_a.q(), spec_b.q()));
    }
    let mut loops = spec_a.loops().to_vec();
    loops.extend_from_slice(spec_b.loops());
    let spec = CurveSpec::new(spec_a.q(), loops, None)?;
    let expected = match (truth_a.expected, truth_b.expected) {
        (Expected::Level(x), Expected::Level(y)) => Expected::Level(x + y),
        _ => Expected::OracleOnly,
    };
    // keep recorded reference values usable even when the summands came from
    // parsed sidecars and carry no live evaluator
    let merged_samples = match (truth_a.samples(), truth_b.samples()) {
        (Some(sa), Some(sb)) if sa.points == sb.points => Some(TruthSamples {
            points: sa.points,
            values: sa
                .values
                .into_iter()
                .zip(sb.values)
                .map(|(mut va, vb)| {
                    va.extend(vb);
                    va
                })
                .collect(),
        }),
        _ => None,
    };
    let evaluator: Option<Evaluator> = match (truth_a.evaluator, truth_b.evaluator) {
        (Some(ea), Some(eb)) => Some(Box::new(move |z| {
            let mut v = ea(z);
            v.extend(eb(z));
            v
        })),
        _ => None,
    };
    let mut truth = GroundTruth::new(Kind::Sum, expected, evaluator);
    if truth.evaluator.is_none() {
        truth.stored_samples = merged_samples;
    }
    Ok((spec, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::membership::{minimal_level_search, FitConfig, Status, Tolerances};
    use crate::moments::{compute_moments, QuadratureConfig};

    fn search(spec: &CurveSpec, l_max: usize) -> (Status, usize, f64) {
        let table =
            compute_moments(spec, 2 * l_max + 2, 4 * l_max + 8, &QuadratureConfig::default())
                .unwrap();
        let v = minimal_level_search(&table, l_max, &FitConfig::default(), &Tolerances::default())
            .unwrap();
        (v.status, v.level, v.residual_rel)
    }

    #[test]
    fn graph_over_origin_declares_and_passes_level_1() {
        let f = Rational::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let (spec, truth) = graph_boundary(&f, Circle::unit(), 1, 1).unwrap();
        assert_eq!(truth.kind, Kind::Graph);
        assert_eq!(truth.expected, Expected::Level(1));
        let sheets = truth.sheets_at(c(0.2, 0.0)).unwrap();
        assert_eq!(sheets.len(), 1);
        assert!((sheets[0] - c(0.048, 0.0)).norm() < 1e-14);
        let (status, level, residual) = search(&spec, 2);
        assert_eq!(status, Status::Bounds);
        assert_eq!(level, 1);
        assert!(residual <= 1e-6);
    }

    #[test]
    fn graph_avoiding_origin_declares_level_0() {
        let f = Rational::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let circle = Circle { center: c(2.0, 0.0), radius: 1.0 };
        let (spec, truth) = graph_boundary(&f, circle, 1, 1).unwrap();
        assert_eq!(truth.expected, Expected::Level(0));
        let (status, level, _) = search(&spec, 1);
        assert_eq!(status, Status::Bounds);
        assert_eq!(level, 0);
    }

    #[test]
    fn reversed_graph_declares_non_bounding() {
        let f = Rational::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let (spec, truth) = graph_boundary(&f, Circle::unit(), -1, 1).unwrap();
        assert_eq!(truth.kind, Kind::Reversed);
        assert_eq!(truth.expected, Expected::NoneUpTo(4));
        let (status, _, residual) = search(&spec, 2);
        assert_eq!(status, Status::Rejects);
        assert!(residual >= 1e-2);
    }

    #[test]
    fn rational_graph_with_outside_pole_bounds() {
        // f = 1 / (z - 3): pole outside the closed unit disk
        let f = Rational { num: vec![c(1.0, 0.0)], den: vec![c(-3.0, 0.0), c(1.0, 0.0)] };
        let (spec, truth) = graph_boundary(&f, Circle::unit(), 1, 1).unwrap();
        assert_eq!(truth.expected, Expected::Level(1));
        let (status, level, _) = search(&spec, 2);
        assert_eq!(status, Status::Bounds);
        assert_eq!(level, 1);
    }

    #[test]
    fn pole_on_the_circle_is_refused() {
        let f = Rational { num: vec![c(1.0, 0.0)], den: vec![c(-1.0, 0.0), c(1.0, 0.0)] };
        let err = graph_boundary(&f, Circle::unit(), 1, 1).unwrap_err();
        assert!(matches!(err, SynthError::PoleNearCircle { .. }));
    }

    #[test]
    fn pole_inside_the_disk_leaves_truth_to_the_oracle() {
        let f = Rational { num: vec![c(1.0, 0.0)], den: vec![c(-0.2, 0.0), c(1.0, 0.0)] };
        let (_, truth) = graph_boundary(&f, Circle::unit(), 1, 1).unwrap();
        assert_eq!(truth.expected, Expected::OracleOnly);
    }

    #[test]
    fn split_algebraic_curve_gives_two_loops() {
        // w^2 = z - 4: branch point outside, two disjoint sheets
        let q = BivariatePoly {
            w_coeffs: vec![vec![c(4.0, 0.0), c(-1.0, 0.0)], vec![], vec![c(1.0, 0.0)]],
        };
        let (spec, truth) = algebraic_boundary(&q, Circle::unit(), 1).unwrap();
        assert_eq!(spec.loops().len(), 2);
        assert_eq!(truth.expected, Expected::Level(2));
        let sheets = truth.sheets_at(c(0.0, 0.0)).unwrap();
        let mut norms: Vec<f64> = sheets.iter().map(|v| (v - c(0.0, 2.0)).norm()).collect();
        norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(norms[0] < 1e-9 && (norms[1] - 4.0).abs() < 1e-9);
        let (status, level, residual) = search(&spec, 3);
        assert_eq!(status, Status::Bounds);
        assert_eq!(level, 2);
        assert!(residual <= 1e-6);
    }

    #[test]
    fn enclosed_branch_point_gives_one_double_covering_loop() {
        // w^2 = z - 1/2: branch point inside, one loop of monodromy order 2
        let q = BivariatePoly {
            w_coeffs: vec![vec![c(0.5, 0.0), c(-1.0, 0.0)], vec![], vec![c(1.0, 0.0)]],
        };
        let (spec, truth) = algebraic_boundary(&q, Circle::unit(), 1).unwrap();
        assert_eq!(spec.loops().len(), 1);
        assert_eq!(truth.expected, Expected::Level(2));
        let (status, level, _) = search(&spec, 3);
        assert_eq!(status, Status::Bounds);
        assert_eq!(level, 2);
    }

    #[test]
    fn degenerate_fiber_over_base_point_is_refused() {
        // w^2 = z: the fiber over the base point is a double root
        let q = BivariatePoly {
            w_coeffs: vec![vec![c(0.0, 0.0), c(-1.0, 0.0)], vec![], vec![c(1.0, 0.0)]],
        };
        let err = algebraic_boundary(&q, Circle::unit(), 1).unwrap_err();
        assert!(matches!(err, SynthError::DegenerateFiber { .. }));
    }

    #[test]
    fn degree_one_polynomial_reduces_to_a_graph() {
        // w = z^2: Q = w - z^2
        let q = BivariatePoly {
            w_coeffs: vec![
                vec![c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
                vec![c(1.0, 0.0)],
            ],
        };
        let (spec, truth) = algebraic_boundary(&q, Circle::unit(), 1).unwrap();
        assert_eq!(spec.loops().len(), 1);
        assert_eq!(truth.expected, Expected::Level(1));
        let sheets = truth.sheets_at(c(0.3, 0.0)).unwrap();
        assert!((sheets[0] - c(0.09, 0.0)).norm() < 1e-9);
        let (status, level, _) = search(&spec, 2);
        assert_eq!(status, Status::Bounds);
        assert_eq!(level, 1);
    }

    #[test]
    fn transcendental_graphs_reject_every_level() {
        for kind in [TranscendentalKind::ExpCos, TranscendentalKind::ExpZPlusInvZ] {
            let (spec, truth) = transcendental_boundary(kind);
            assert_eq!(truth.expected, Expected::NoneUpTo(4));
            let (status, _, residual) = search(&spec, 4);
            assert_eq!(status, Status::Rejects, "kind {kind:?}");
            assert!(residual >= 1e-2, "kind {kind:?} residual {residual}");
        }
    }

    #[test]
    fn sums_add_expected_levels_and_sheets() {
        let f = Rational::polynomial(vec![c(0.3, 0.0), c(1.0, 0.0)]);
        let g = Rational::polynomial(vec![c(-0.1, 0.2), c(0.0, 0.0), c(1.0, 0.0)]);
        let a = graph_boundary(&f, Circle::unit(), 1, 1).unwrap();
        let b = graph_boundary(&g, Circle::unit(), 1, 1).unwrap();
        let (spec, truth) = sum_boundaries(a, b).unwrap();
        assert_eq!(spec.loops().len(), 2);
        assert_eq!(truth.kind, Kind::Sum);
        assert_eq!(truth.expected, Expected::Level(2));
        let sheets = truth.sheets_at(c(0.1, 0.1)).unwrap();
        assert_eq!(sheets.len(), 2);
        let (status, level, _) = search(&spec, 3);
        assert_eq!(status, Status::Bounds);
        assert_eq!(level, 2);
    }

    #[test]
    fn truth_sidecar_roundtrip() {
        let texts = [
            GroundTruth::new(Kind::Graph, Expected::Level(2), None).to_json(),
            GroundTruth::new(Kind::Reversed, Expected::NoneUpTo(4), None).to_json(),
            GroundTruth::new(Kind::Algebraic, Expected::OracleOnly, None).to_json(),
        ];
        let back: Vec<GroundTruth> =
            texts.iter().map(|t| GroundTruth::from_json(t).unwrap()).collect();
        assert_eq!(back[0].expected, Expected::Level(2));
        assert_eq!(back[0].kind, Kind::Graph);
        assert_eq!(back[1].expected, Expected::NoneUpTo(4));
        assert_eq!(back[2].expected, Expected::OracleOnly);
    }

    #[test]
    fn sidecar_carries_reference_sheet_values() {
        let f = Rational::polynomial(vec![c(0.3, 0.0), c(1.0, 0.0)]);
        let (_, truth) = graph_boundary(&f, Circle::unit(), 1, 1).unwrap();
        let parsed = GroundTruth::from_json(&truth.to_json()).unwrap();
        let samples = parsed.samples().unwrap();
        assert_eq!(samples.points.len(), 16);
        for (p, vals) in samples.points.iter().zip(&samples.values) {
            let z = c(p[0], p[1]);
            assert!(z.norm() <= 0.3 + 1e-12);
            let got = c(vals[0][0], vals[0][1]);
            assert!((got - f.eval(z)).norm() < 1e-12);
        }
    }
}
