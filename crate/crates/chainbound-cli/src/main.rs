//! Command line front end: compute moment tables, test boundary membership,
//! reconstruct sheets, and generate corpus curves with known ground truth.
//!
//! All interchange is JSON. Summaries go to standard output; files are
//! written atomically (temp file + rename). Exit codes: 0 success/bounds,
//! 1 input error, 2 numeric failure, 3 internal error, 4 rejects,
//! 5 inconclusive.

use chainbound::curve::{CurveError, CurveSpec};
use chainbound::membership::{
    minimal_level_search, solve_level, FitConfig, MembershipError, Status, Tolerances, Verdict,
};
use chainbound::moments::{compute_moments, MomentError, MomentTable, QuadratureConfig};
use chainbound::reconstruct::{
    compare_to_truth, reconstruct_sheets, samples_to_json, ReconstructError,
};
use chainbound::scalar::Scalar;
use chainbound::synth::{
    algebraic_boundary, graph_boundary, sum_boundaries, transcendental_boundary, BivariatePoly,
    Circle, Expected, GroundTruth, Rational, SynthError, TranscendentalKind,
};
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_INPUT: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_INTERNAL: u8 = 3;
const EXIT_REJECTS: u8 = 4;
const EXIT_INCONCLUSIVE: u8 = 5;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Failure { code: EXIT_NUMERIC, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INTERNAL, message: message.into() }
    }
}

impl From<CurveError> for Failure {
    fn from(e: CurveError) -> Self {
        Failure::input(format!("curve: {e}"))
    }
}

impl From<MomentError> for Failure {
    fn from(e: MomentError) -> Self {
        match e {
            MomentError::Overflow { .. } | MomentError::PointTooClose { .. } => {
                Failure::numeric(format!("moments: {e}"))
            }
            _ => Failure::input(format!("moments: {e}")),
        }
    }
}

impl From<MembershipError> for Failure {
    fn from(e: MembershipError) -> Self {
        Failure::input(format!("membership: {e}"))
    }
}

impl From<ReconstructError> for Failure {
    fn from(e: ReconstructError) -> Self {
        match e {
            ReconstructError::PointTooClose { .. } | ReconstructError::Roots(_) => {
                Failure::numeric(format!("reconstruct: {e}"))
            }
            ReconstructError::Moment(inner) => Failure::from(inner),
            _ => Failure::input(format!("reconstruct: {e}")),
        }
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::TrackingFailed { .. }
            | SynthError::BranchPointNearCircle { .. }
            | SynthError::Roots(_) => Failure::numeric(format!("synth: {e}")),
            _ => Failure::input(format!("synth: {e}")),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "chainbound",
    version,
    about = "Decide whether a closed curve bounds a positive holomorphic 1-chain, \
             and reconstruct its sheets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the moment table of a curve and write it as JSON
    Moments(MomentsArgs),
    /// Test boundary membership at a fixed level or by minimal-level search
    Test(TestArgs),
    /// Evaluate the sheet values of an accepted chain near the base point
    Reconstruct(ReconstructArgs),
    /// Generate corpus curves with known ground truth
    Synth(SynthArgs),
}

#[derive(Args)]
struct QuadArgs {
    /// Starting node count for the node-doubling quadrature ladder
    #[arg(long, default_value_t = 64)]
    nodes: usize,
    /// Node count ceiling for the ladder
    #[arg(long, default_value_t = 65536)]
    nmax: usize,
}

impl QuadArgs {
    fn config(&self) -> Result<QuadratureConfig, Failure> {
        if self.nodes == 0 || self.nmax < self.nodes {
            return Err(Failure::input("--nodes must be positive and --nmax >= --nodes"));
        }
        Ok(QuadratureConfig { n0: self.nodes, n_max: self.nmax, ..QuadratureConfig::default() })
    }
}

#[derive(Args)]
struct TolArgs {
    /// Accept when the relative residual is at or below this
    #[arg(long = "tol-accept", default_value_t = 1e-6)]
    tol_accept: f64,
    /// Reject when the relative residual is at or above this
    #[arg(long = "tol-reject", default_value_t = 1e-4)]
    tol_reject: f64,
}

impl TolArgs {
    fn tolerances(&self) -> Result<Tolerances, Failure> {
        if !(self.tol_accept > 0.0 && self.tol_reject > 0.0) {
            return Err(Failure::input("tolerances must be positive"));
        }
        if self.tol_accept >= self.tol_reject {
            return Err(Failure::input("--tol-accept must be below --tol-reject"));
        }
        Ok(Tolerances { accept: self.tol_accept, reject: self.tol_reject })
    }
}

#[derive(Args)]
struct MomentsArgs {
    /// Curve JSON file
    #[arg(long)]
    curve: PathBuf,
    /// Highest total fiber degree in the table
    #[arg(long, default_value_t = 4)]
    dmax: usize,
    /// Highest base-power coefficient per row
    #[arg(long, default_value_t = 12)]
    kmax: usize,
    #[command(flatten)]
    quad: QuadArgs,
    /// Output path for the table JSON
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TestArgs {
    /// Curve JSON file (table computed inline)
    #[arg(long, conflicts_with = "table")]
    curve: Option<PathBuf>,
    /// Precomputed moment table JSON file
    #[arg(long)]
    table: Option<PathBuf>,
    /// Test exactly this sheet count
    #[arg(long, conflicts_with = "lmax")]
    level: Option<usize>,
    /// Search the minimal sheet count up to this bound [default: 4]
    #[arg(long)]
    lmax: Option<usize>,
    /// Table degree bound when computing inline [default: from the level]
    #[arg(long)]
    dmax: Option<usize>,
    /// Table coefficient bound when computing inline [default: from the level]
    #[arg(long)]
    kmax: Option<usize>,
    #[command(flatten)]
    tol: TolArgs,
    #[command(flatten)]
    quad: QuadArgs,
    /// Seed for the solver's multi-start randomization
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the verdict JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Curve JSON file
    #[arg(long)]
    curve: PathBuf,
    /// Verdict JSON file from a previous test run; when absent the test runs
    /// inline with --level / --lmax
    #[arg(long)]
    verdict: Option<PathBuf>,
    /// Sheet count for an inline test
    #[arg(long, conflicts_with = "lmax")]
    level: Option<usize>,
    /// Minimal-level search bound for an inline test [default: 4]
    #[arg(long)]
    lmax: Option<usize>,
    /// Evaluation points: inline JSON `[[re,im],...]` or a path to such JSON
    #[arg(long)]
    points: Option<String>,
    /// Truth sidecar JSON to compare reconstructed sheets against
    #[arg(long)]
    truth: Option<PathBuf>,
    #[command(flatten)]
    tol: TolArgs,
    #[command(flatten)]
    quad: QuadArgs,
    /// Seed for the solver's multi-start randomization (inline test)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the sheet sample JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(subcommand)]
    family: SynthFamily,
}

#[derive(Subcommand)]
enum SynthFamily {
    /// Graph of a rational function of z over a circle
    Graph {
        /// Numerator coefficients, ascending, as JSON `[[re,im],...]`
        #[arg(long)]
        num: String,
        /// Denominator coefficients, ascending, as JSON `[[re,im],...]`
        #[arg(long, default_value = "[[1,0]]")]
        den: String,
        /// Circle center as JSON `[re,im]`
        #[arg(long, default_value = "[0,0]")]
        center: String,
        /// Circle radius
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Traversal orientation: 1 or -1
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        orientation: i64,
        /// Traversal count
        #[arg(long, default_value_t = 1)]
        multiplicity: i64,
        /// Output path for the curve JSON
        #[arg(long)]
        out: PathBuf,
        /// Output path for the truth sidecar [default: <out>.truth.json]
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Boundary of the algebraic curve Q(z,w)=0 over a circle
    Algebraic {
        /// Coefficients of Q as JSON `[[..w^0 row..],[..w^1 row..],...]`,
        /// each row the ascending z-coefficients of that power of w
        #[arg(long)]
        poly: String,
        /// Circle center as JSON `[re,im]`
        #[arg(long, default_value = "[0,0]")]
        center: String,
        /// Circle radius
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Traversal count applied to every tracked loop
        #[arg(long, default_value_t = 1)]
        multiplicity: i64,
        /// Output path for the curve JSON
        #[arg(long)]
        out: PathBuf,
        /// Output path for the truth sidecar [default: <out>.truth.json]
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Real-analytic graph over the unit circle that bounds nothing
    Transcendental {
        /// Which graph: "expcos" for exp(cos theta), "expzinvz" for
        /// exp(z + 1/z)
        #[arg(long, value_parser = ["expcos", "expzinvz"])]
        kind: String,
        /// Output path for the curve JSON
        #[arg(long)]
        out: PathBuf,
        /// Output path for the truth sidecar [default: <out>.truth.json]
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Disjoint union of two generated curves; expected levels add
    Sum {
        /// Exactly two curve JSON files
        #[arg(long, num_args = 2)]
        curves: Vec<PathBuf>,
        /// Their truth sidecars, in the same order
        #[arg(long, num_args = 2)]
        truths: Vec<PathBuf>,
        /// Output path for the curve JSON
        #[arg(long)]
        out: PathBuf,
        /// Output path for the truth sidecar [default: <out>.truth.json]
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    check_thread_cap()?;
    match command {
        Command::Moments(args) => cmd_moments(args),
        Command::Test(args) => cmd_test(args),
        Command::Reconstruct(args) => cmd_reconstruct(args),
        Command::Synth(args) => cmd_synth(args.family),
    }
}

/// Validate the optional worker cap. The pipeline currently runs a single
/// worker, so any cap of at least one is satisfied as-is.
fn check_thread_cap() -> Result<(), Failure> {
    match std::env::var("CHAINBOUND_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(()),
            _ => Err(Failure::input(format!(
                "CHAINBOUND_THREADS must be a positive integer, got {raw:?}"
            ))),
        },
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<(), Failure> {
    let name = path
        .file_name()
        .ok_or_else(|| Failure::input(format!("{} has no file name", path.display())))?
        .to_string_lossy()
        .into_owned();
    let tmp = path.with_file_name(format!("{name}.tmp"));
    let body = format!("{text}\n");
    fs::write(&tmp, body)
        .map_err(|e| Failure::internal(format!("writing {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| Failure::internal(format!("renaming onto {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("reading {}: {e}", path.display())))
}

fn parse_pairs(text: &str) -> Result<Vec<Scalar>, Failure> {
    let pairs: Vec<[f64; 2]> = serde_json::from_str(text)
        .map_err(|e| Failure::input(format!("expected JSON [[re,im],...]: {e}")))?;
    Ok(pairs.into_iter().map(|p| Scalar::new(p[0], p[1])).collect())
}

fn parse_pair(text: &str) -> Result<Scalar, Failure> {
    let p: [f64; 2] = serde_json::from_str(text)
        .map_err(|e| Failure::input(format!("expected JSON [re,im]: {e}")))?;
    Ok(Scalar::new(p[0], p[1]))
}

/// `--points` accepts inline JSON or the path of a JSON file.
fn parse_points(arg: &str) -> Result<Vec<Scalar>, Failure> {
    if arg.trim_start().starts_with('[') {
        parse_pairs(arg)
    } else {
        parse_pairs(&read_text(Path::new(arg))?)
    }
}

fn cmd_moments(args: MomentsArgs) -> Result<u8, Failure> {
    let spec = CurveSpec::load(&args.curve)?;
    let quad = args.quad.config()?;
    if args.dmax == 0 || args.kmax == 0 {
        return Err(Failure::input("--dmax and --kmax must be positive"));
    }
    let table = compute_moments(&spec, args.dmax, args.kmax, &quad)?;
    write_atomic(&args.out, &table.to_json())?;

    let diag = table.diagnostics();
    println!(
        "moment table: q={}, d_max={}, k_max={}, written to {}",
        table.q(),
        table.d_max(),
        table.k_max(),
        args.out.display()
    );
    println!(
        "quadrature: {} nodes, {} (last change {:.3e})",
        diag.nodes,
        if diag.converged { "converged" } else { "NOT CONVERGED" },
        diag.last_change
    );
    println!("winding around the base point: {:.3}", table.winding().re);
    let mut largest: (f64, String) = (0.0, String::from("-"));
    for (alpha, row) in table.rows() {
        for (k, v) in row.iter().enumerate() {
            if v.norm() > largest.0 {
                largest = (v.norm(), format!("alpha={:?}, k={k}", alpha.0));
            }
        }
    }
    println!("largest |entry|: {:.6e} at {}", largest.0, largest.1);
    Ok(0)
}

fn load_or_compute_table(
    curve: &Option<PathBuf>,
    table: &Option<PathBuf>,
    level_hint: usize,
    dmax: Option<usize>,
    kmax: Option<usize>,
    quad: &QuadratureConfig,
) -> Result<MomentTable, Failure> {
    if let Some(path) = table {
        return Ok(MomentTable::load(path)?);
    }
    let Some(curve_path) = curve else {
        return Err(Failure::input("provide --curve or --table"));
    };
    let spec = CurveSpec::load(curve_path)?;
    let d = dmax.unwrap_or(2 * level_hint + 2);
    let k = kmax.unwrap_or(4 * level_hint + 8);
    Ok(compute_moments(&spec, d, k, quad)?)
}

fn print_verdict(verdict: &Verdict) {
    let status = match verdict.status {
        Status::Bounds => "bounds",
        Status::Rejects => "rejects",
        Status::Inconclusive => "inconclusive",
    };
    println!(
        "status: {status} at level {} (residual {:.3e})",
        verdict.level, verdict.residual_rel
    );
    println!(
        "conditions: d <= {}, k <= {}, {} residual components",
        verdict.conditions.d_used, verdict.conditions.k_used, verdict.conditions.count
    );
    if verdict.levels_tried.len() > 1 {
        let tried: Vec<String> = verdict
            .levels_tried
            .iter()
            .map(|o| format!("{}@{:?}", o.level, o.status).to_lowercase())
            .collect();
        println!("levels tried: {}", tried.join(", "));
    }
    if verdict.solver.fallback {
        println!("note: closed-form fast path was ill-conditioned, general solver used");
    }
}

fn verdict_exit(status: Status) -> u8 {
    match status {
        Status::Bounds => 0,
        Status::Rejects => EXIT_REJECTS,
        Status::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn cmd_test(args: TestArgs) -> Result<u8, Failure> {
    let tol = args.tol.tolerances()?;
    let quad = args.quad.config()?;
    let level_hint = args.level.unwrap_or_else(|| args.lmax.unwrap_or(4));
    let table =
        load_or_compute_table(&args.curve, &args.table, level_hint, args.dmax, args.kmax, &quad)?;
    let fit = FitConfig { seed: args.seed, ..FitConfig::default() };
    let verdict = match args.level {
        Some(level) => solve_level(&table, level, &fit, &tol)?,
        None => minimal_level_search(&table, args.lmax.unwrap_or(4), &fit, &tol)?,
    };
    if let Some(out) = &args.out {
        write_atomic(out, &verdict.to_json())?;
        println!("verdict written to {}", out.display());
    }
    print_verdict(&verdict);
    Ok(verdict_exit(verdict.status))
}

fn cmd_reconstruct(args: ReconstructArgs) -> Result<u8, Failure> {
    let tol = args.tol.tolerances()?;
    let quad = args.quad.config()?;
    let spec = CurveSpec::load(&args.curve)?;

    let verdict = match &args.verdict {
        Some(path) => Verdict::load(path)?,
        None => {
            let level_hint = args.level.unwrap_or_else(|| args.lmax.unwrap_or(4));
            let table = compute_moments(&spec, 2 * level_hint + 2, 4 * level_hint + 8, &quad)?;
            let fit = FitConfig { seed: args.seed, ..FitConfig::default() };
            match args.level {
                Some(level) => solve_level(&table, level, &fit, &tol)?,
                None => minimal_level_search(&table, args.lmax.unwrap_or(4), &fit, &tol)?,
            }
        }
    };

    let truth = args.truth.as_deref().map(read_text).transpose()?;
    let truth = truth
        .map(|text| {
            GroundTruth::from_json(&text)
                .map_err(|e| Failure::input(format!("truth sidecar: {e}")))
        })
        .transpose()?;
    let truth_samples = truth.as_ref().and_then(GroundTruth::samples);

    let mut points: Vec<Scalar> = Vec::new();
    if let Some(samples) = &truth_samples {
        points.extend(samples.points.iter().map(|p| Scalar::new(p[0], p[1])));
    }
    if let Some(arg) = &args.points {
        points.extend(parse_points(arg)?);
    }
    if points.is_empty() {
        return Err(Failure::input("no evaluation points: pass --points or a --truth sidecar"));
    }

    let samples = reconstruct_sheets(&spec, &verdict, &points, &quad, &tol)?;
    let worst_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    println!(
        "reconstructed {} sheet(s) per fiber coordinate at {} point(s); worst root residual {:.3e}",
        verdict.level,
        samples.len(),
        worst_residual
    );

    if let Some(truth_samples) = &truth_samples {
        let n = truth_samples.points.len();
        let expected: Vec<Vec<Vec<Scalar>>> = truth_samples
            .values
            .iter()
            .map(|per_point| {
                vec![per_point.iter().map(|p| Scalar::new(p[0], p[1])).collect::<Vec<_>>()]
            })
            .collect();
        let distance = compare_to_truth(&samples[..n], &expected)?;
        println!("truth comparison over {n} point(s): max matched distance {distance:.3e}");
    }

    if let Some(out) = &args.out {
        write_atomic(out, &samples_to_json(&samples))?;
        println!("samples written to {}", out.display());
    }
    Ok(0)
}

fn parse_poly_rows(text: &str) -> Result<Vec<Vec<Scalar>>, Failure> {
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(text)
        .map_err(|e| Failure::input(format!("expected JSON [[[re,im],...],...]: {e}")))?;
    Ok(rows
        .into_iter()
        .map(|row| row.into_iter().map(|p| Scalar::new(p[0], p[1])).collect())
        .collect())
}

fn describe_expected(expected: &Expected) -> String {
    match expected {
        Expected::Level(l) => format!("bounds with {l} sheet(s)"),
        Expected::NoneUpTo(l) => format!("bounds nothing up to level {l}"),
        Expected::OracleOnly => String::from("no declared truth (oracle only)"),
    }
}

fn emit_synth(
    spec: &CurveSpec,
    truth: &GroundTruth,
    out: &Path,
    truth_out: Option<PathBuf>,
) -> Result<u8, Failure> {
    let truth_path = truth_out.unwrap_or_else(|| {
        let name = out.file_name().map(|s| s.to_string_lossy().into_owned());
        let stem = name.as_deref().and_then(|n| n.strip_suffix(".json")).map(str::to_owned);
        match (stem, name) {
            (Some(stem), _) => out.with_file_name(format!("{stem}.truth.json")),
            (None, Some(name)) => out.with_file_name(format!("{name}.truth.json")),
            (None, None) => out.with_extension("truth.json"),
        }
    });
    write_atomic(out, &spec.to_json())?;
    write_atomic(&truth_path, &truth.to_json())?;
    println!(
        "curve: {} loop(s), q={}, written to {}",
        spec.loops().len(),
        spec.q(),
        out.display()
    );
    println!(
        "truth: {:?}, {}; written to {}",
        truth.kind,
        describe_expected(&truth.expected),
        truth_path.display()
    );
    Ok(0)
}

fn cmd_synth(family: SynthFamily) -> Result<u8, Failure> {
    match family {
        SynthFamily::Graph {
            num,
            den,
            center,
            radius,
            orientation,
            multiplicity,
            out,
            truth,
        } => {
            let f = Rational { num: parse_pairs(&num)?, den: parse_pairs(&den)? };
            let circle = Circle { center: parse_pair(&center)?, radius };
            let (spec, ground) = graph_boundary(&f, circle, orientation, multiplicity)?;
            emit_synth(&spec, &ground, &out, truth)
        }
        SynthFamily::Algebraic { poly, center, radius, multiplicity, out, truth } => {
            let q = BivariatePoly { w_coeffs: parse_poly_rows(&poly)? };
            let circle = Circle { center: parse_pair(&center)?, radius };
            let (spec, ground) = algebraic_boundary(&q, circle, multiplicity)?;
            emit_synth(&spec, &ground, &out, truth)
        }
        SynthFamily::Transcendental { kind, out, truth } => {
            let kind = match kind.as_str() {
                "expcos" => TranscendentalKind::ExpCos,
                _ => TranscendentalKind::ExpZPlusInvZ,
            };
            let (spec, ground) = transcendental_boundary(kind);
            emit_synth(&spec, &ground, &out, truth)
        }
        SynthFamily::Sum { curves, truths, out, truth } => {
            if curves.len() != 2 || truths.len() != 2 {
                return Err(Failure::input("--curves and --truths each take exactly two paths"));
            }
            let spec_a = CurveSpec::load(&curves[0])?;
            let spec_b = CurveSpec::load(&curves[1])?;
            let truth_a = GroundTruth::from_json(&read_text(&truths[0])?)
                .map_err(|e| Failure::input(format!("truth sidecar {}: {e}", truths[0].display())))?;
            let truth_b = GroundTruth::from_json(&read_text(&truths[1])?)
                .map_err(|e| Failure::input(format!("truth sidecar {}: {e}", truths[1].display())))?;
            let (spec, ground) = sum_boundaries((spec_a, truth_a), (spec_b, truth_b))?;
            emit_synth(&spec, &ground, &out, truth)
        }
    }
}
