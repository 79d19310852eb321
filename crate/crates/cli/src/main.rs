//! `shuffle-regress`: generate instances, solve them and run the Monte-Carlo
//! checks.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 declared solver
//! failure, 4 internal invariant breach (or a failed statistical check).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use num_traits::ToPrimitive;
use serde_json::{json, Value};
use shuffle_regress::approx::{fptas_solve_with, ApproxError, CandidateMode, FptasConfig};
use shuffle_regress::experiment::{
    check_order_stats, check_w2, sweep_snr, ExperimentConfig, ExperimentError, ModelKind, SolverKind,
};
use shuffle_regress::hardness::{reduce_3partition, HardnessError, ThreePartitionInstance};
use shuffle_regress::lattice::{recover, BetaPolicy, LatticeError, RecoveryConfig, RecoveryOutcome};
use shuffle_regress::model::{
    gen_noiseless_anchored, gen_with_law, noiseless_exact, random_unit_vector, read_document, stream,
    CovariateLaw, Document, ExactAnchoredInstance, ModelError, PermutationLaw, QuantizationConfig,
    Rational, Stream,
};
use shuffle_regress::oracle::{brute_force, OracleError};
use shuffle_regress::{AnchoredInstance, GroundTruth, Instance};

#[derive(Parser)]
#[command(name = "shuffle-regress", version, about = "Shuffled linear regression solvers and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Gen(GenArgs),
    /// Solve an instance file and print the result as JSON.
    Solve(SolveArgs),
    /// Estimation error against the signal-to-noise ratio, as CSV.
    SweepSnr(SweepArgs),
    /// Check the uniform order-statistic identity.
    CheckOrderStats(OrderArgs),
    /// Sorted-projection distance against n, as CSV.
    CheckW2(W2Args),
    /// Reduce a 3-Partition instance to a permuted linear system.
    Reduce(ReduceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Gaussian,
    Uniform,
    Noiseless,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Gaussian => ModelKind::Gaussian,
            ModelArg::Uniform => ModelKind::Uniform,
            ModelArg::Noiseless => ModelKind::Noiseless,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Fptas,
    Brute,
    Lattice,
    KnownPerm,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Distinct,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum BetaArg {
    Theorem,
    Proof,
}

#[derive(Args)]
struct Output {
    /// Output file; standard output if absent.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

impl Output {
    fn write(&self, text: &str) -> Result<(), Failure> {
        match &self.output {
            Some(p) => std::fs::write(p, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
            None => {
                let mut out = io::stdout().lock();
                out.write_all(text.as_bytes()).map_err(|e| Failure::internal(e.to_string()))
            }
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// `||w||^2 / sigma^2` with `||w|| = 1`; ignored by the noiseless model.
    #[arg(long, default_value_t = f64::INFINITY)]
    snr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Quantization bits for the noiseless model.
    #[arg(long, default_value_t = 16)]
    p: u32,
    /// Pair the anchor response with the anchor covariate.
    #[arg(long)]
    anchored: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "fptas")]
    solver: SolverArg,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, value_enum, default_value = "distinct")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, value_enum, default_value = "theorem")]
    beta: BetaArg,
    /// Separation bound for the lattice solver, overriding the formula.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Scan every reduced basis vector, not only the first.
    #[arg(long)]
    scan_all: bool,
    #[arg(long, env = "SHUFFLE_REGRESS_JOBS")]
    jobs: Option<usize>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// Comma-separated grid; `inf` is allowed.
    #[arg(long, value_delimiter = ',', required = true)]
    snr: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    solver: SolverArg,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 16)]
    p: u32,
    #[arg(long, env = "SHUFFLE_REGRESS_JOBS")]
    jobs: Option<usize>,
    /// Fill the wall_time column.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct OrderArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct W2Args {
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    d: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Required ratio of the first to the last `mean / n`.
    #[arg(long, default_value_t = 4.0)]
    min_shrink: f64,
    #[arg(long, env = "SHUFFLE_REGRESS_JOBS")]
    jobs: Option<usize>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct ReduceArgs {
    /// Comma-separated integers.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    z: Vec<i64>,
    /// Number of triples; defaults to len(z) / 3.
    #[arg(long)]
    k: Option<usize>,
    /// Triple sum; defaults to sum(z) / k.
    #[arg(long)]
    c: Option<i64>,
    #[command(flatten)]
    out: Output,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn solver(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<ApproxError> for Failure {
    fn from(e: ApproxError) -> Self {
        match e {
            ApproxError::Argument(_) => Self::usage(e.to_string()),
            ApproxError::Budget { .. } => Self::solver(e.to_string()),
            ApproxError::RowSample(_) => Self::internal(e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<LatticeError> for Failure {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::Argument(_) | LatticeError::Unsupported(_) | LatticeError::Model(_) => {
                Self::usage(e.to_string())
            }
            LatticeError::Rank { .. } | LatticeError::Degenerate => Self::solver(e.to_string()),
            LatticeError::Internal(_) => Self::internal(e.to_string()),
        }
    }
}

impl From<HardnessError> for Failure {
    fn from(e: HardnessError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(_) | ExperimentError::Cap { .. } => Self::usage(e.to_string()),
            ExperimentError::Model(m) => m.into(),
            ExperimentError::Approx(a) => a.into(),
            ExperimentError::Oracle(o) => o.into(),
            ExperimentError::Lattice(l) => l.into(),
        }
    }
}

fn rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

fn cmd_gen(a: &GenArgs) -> Result<(), Failure> {
    if a.n == 0 || a.d == 0 {
        return Err(Failure::usage(format!("need n, d >= 1, got n={}, d={}", a.n, a.d)));
    }
    let w_bar = random_unit_vector::<f64, _>(a.d, &mut stream(a.seed, Stream::Weights));
    let doc = match a.model {
        ModelArg::Noiseless => {
            let (inst, truth) = gen_noiseless_anchored(a.n, a.d, &w_bar, a.anchored, a.seed)?;
            let cfg = QuantizationConfig::new(a.p)?;
            let (exact, w_q) = noiseless_exact(&inst, &truth, cfg)?;
            let stored = exact.to_f64();
            if ExactAnchoredInstance::from_f64(&stored)? != exact {
                return Err(Failure::usage(format!(
                    "p = {} is too fine for the quantized data to be stored exactly",
                    a.p
                )));
            }
            let w_q = DVector::from_iterator(a.d, w_q.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)));
            let truth = GroundTruth::new(w_q, truth.pi_bar, 0.0);
            Document::Anchored {
                instance: stored,
                truth: Some(truth),
                quantization: Some(cfg),
            }
        }
        ModelArg::Gaussian | ModelArg::Uniform => {
            if !(a.snr > 0.0) {
                return Err(Failure::usage(format!("snr must be > 0, got {}", a.snr)));
            }
            let law = match a.model {
                ModelArg::Uniform => CovariateLaw::Uniform,
                _ => CovariateLaw::Gaussian,
            };
            let sigma = 1.0 / a.snr.sqrt();
            let (instance, truth) = gen_with_law(a.n, a.d, &w_bar, sigma, law, &PermutationLaw::Uniform, a.seed)?;
            Document::Plain {
                instance,
                truth: Some(truth),
            }
        }
    };
    a.out.write(&format!("{}\n", doc.to_json()))?;
    let dest = a.out.output.as_ref().map_or("stdout".into(), |p| p.display().to_string());
    eprintln!("wrote n={} d={} to {dest}", a.n, a.d);
    Ok(())
}

fn solution_json(solver: &str, w: &[f64], perm: &[usize], cost: f64) -> Value {
    json!({ "status": "solved", "solver": solver, "w": w, "perm": perm, "cost": cost })
}

/// The anchored view of a document: plain instances use their first row.
fn anchored_view(doc: &Document) -> Result<AnchoredInstance, Failure> {
    match doc {
        Document::Anchored { instance, .. } => Ok(instance.clone()),
        Document::Plain { instance, .. } => split_first(instance),
    }
}

fn split_first(inst: &Instance) -> Result<AnchoredInstance, Failure> {
    let n = inst.n();
    if n < 2 {
        return Err(Failure::usage("the lattice solver needs at least two measurements"));
    }
    let x0 = inst.x().row(0).transpose();
    let x = inst.x().rows(1, n - 1).into_owned();
    let y = inst.y().rows(1, n - 1).into_owned();
    Ok(AnchoredInstance::new(x0, x, inst.y()[0], y)?)
}

fn cmd_solve(a: &SolveArgs) -> Result<(), Failure> {
    let doc = read_document(&a.input)?;
    let report = match a.solver {
        SolverArg::Fptas => {
            let inst = doc.instance();
            let cfg = FptasConfig {
                mode: match a.mode {
                    ModeArg::Distinct => CandidateMode::Distinct,
                    ModeArg::Full => CandidateMode::Full,
                },
                parallel: a.jobs.is_some_and(|j| j > 1),
                ..FptasConfig::new(a.eps)
            };
            let (s, stats) = with_jobs(a.jobs, || fptas_solve_with(&inst, &cfg))??;
            let mut v = solution_json("fptas", s.w.as_slice(), s.perm.as_slice(), s.cost);
            v["stats"] = json!({
                "k": stats.k,
                "candidates": stats.candidates.to_string(),
                "candidates_searched": stats.candidates_searched.to_string(),
                "net_points": stats.net_points.to_string(),
            });
            v
        }
        SolverArg::Brute => {
            let s = brute_force(&doc.instance())?;
            solution_json("brute", s.w.as_slice(), s.perm.as_slice(), s.cost)
        }
        SolverArg::Lattice => return solve_lattice(a, &doc),
        SolverArg::KnownPerm => return Err(Failure::usage("known-perm is only available in sweep-snr")),
    };
    a.out.write(&format!("{}\n", serde_json::to_string_pretty(&report).expect("json")))
}

fn solve_lattice(a: &SolveArgs, doc: &Document) -> Result<(), Failure> {
    let exact = ExactAnchoredInstance::from_f64(&anchored_view(doc)?)?;
    let cfg = RecoveryConfig {
        delta: a.delta,
        beta_policy: match a.beta {
            BetaArg::Theorem => BetaPolicy::Theorem,
            BetaArg::Proof => BetaPolicy::ProofExponent,
        },
        epsilon_override: a
            .epsilon
            .map(|e| {
                Rational::from_float(e)
                    .filter(|q| e > 0.0 && q.numer() > &0.into())
                    .ok_or_else(|| Failure::usage(format!("epsilon must be positive and finite, got {e}")))
            })
            .transpose()?,
        scan_all: a.scan_all,
        parallel: a.jobs.is_some_and(|j| j > 1),
        ..RecoveryConfig::default()
    };
    let outcome = with_jobs(a.jobs, || recover(&exact, &cfg))??;
    match outcome {
        RecoveryOutcome::Recovered(r) => {
            let report = json!({
                "status": "recovered",
                "solver": "lattice",
                "w": r.w.iter().map(rational).collect::<Vec<_>>(),
                "perm": r.perm.as_slice(),
                "anchor": r.anchor,
                "vector_index": r.vector_index,
                "beta": rational(&r.beta),
            });
            a.out.write(&format!("{}\n", serde_json::to_string_pretty(&report).expect("json")))
        }
        RecoveryOutcome::Failure { skipped } => {
            let report = json!({ "status": "failure", "solver": "lattice", "skipped_anchors": skipped });
            a.out.write(&format!("{}\n", serde_json::to_string_pretty(&report).expect("json")))?;
            Err(Failure::solver("no anchor produced a verified solution"))
        }
    }
}

fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, Failure> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Failure::usage("jobs must be >= 1")),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map(|p| p.install(f))
            .map_err(|e| Failure::internal(e.to_string())),
    }
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| Failure::internal(e.to_string());
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(&r).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::internal(e.to_string()))
}

fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

const SWEEP_HEADER: [&str; 10] = [
    "snr",
    "n",
    "d",
    "trials",
    "solver",
    "mean_error",
    "std_error",
    "success_rate",
    "baseline_error",
    "wall_time",
];

fn cmd_sweep(a: &SweepArgs) -> Result<(), Failure> {
    let solver = match a.solver {
        SolverArg::Fptas => SolverKind::Fptas,
        SolverArg::Brute => SolverKind::Brute,
        SolverArg::Lattice => SolverKind::Lattice,
        SolverArg::KnownPerm => SolverKind::KnownPerm,
    };
    let cfg = ExperimentConfig {
        trials: a.trials,
        seed: a.seed,
        eps: a.eps,
        delta: a.delta,
        p: a.p,
        jobs: a.jobs,
        timing: a.timing,
        ..ExperimentConfig::new(a.model.into(), solver, a.n, a.d, a.snr.clone())
    };
    let name = solver_name(a.solver);
    let rows = sweep_snr(&cfg)?
        .into_iter()
        .map(|r| {
            vec![
                num(r.snr),
                r.n.to_string(),
                r.d.to_string(),
                r.trials.to_string(),
                name.to_string(),
                num(r.mean_error),
                num(r.std_error),
                num(r.success_rate),
                num(r.baseline_error),
                r.wall_time.map(num).unwrap_or_default(),
            ]
        })
        .collect();
    a.out.write(&csv_text(&SWEEP_HEADER, rows)?)
}

fn solver_name(s: SolverArg) -> &'static str {
    match s {
        SolverArg::Fptas => "fptas",
        SolverArg::Brute => "brute",
        SolverArg::Lattice => "lattice",
        SolverArg::KnownPerm => "known-perm",
    }
}

fn cmd_order_stats(a: &OrderArgs) -> Result<(), Failure> {
    let r = check_order_stats(a.n, a.trials, a.seed)?;
    let report = json!({
        "n": r.n,
        "trials": r.trials,
        "mean_sum": r.mean_sum,
        "closed_form": r.closed_form,
        "relative_error": r.relative_error,
        "order_means": r.order_means,
        "order_expected": r.order_expected,
    });
    a.out.write(&format!("{}\n", serde_json::to_string_pretty(&report).expect("json")))
}

fn cmd_w2(a: &W2Args) -> Result<(), Failure> {
    let r = with_jobs(a.jobs, || check_w2(&a.n, a.d, a.trials, a.seed, None))??;
    let rows = r
        .rows
        .iter()
        .map(|row| {
            vec![
                row.n.to_string(),
                row.d.to_string(),
                row.trials.to_string(),
                num(row.mean),
                num(row.mean_over_n),
            ]
        })
        .collect();
    a.out.write(&csv_text(&["n", "d", "trials", "mean", "mean_over_n"], rows)?)?;
    eprintln!("monotone={} shrink={:.3}", r.monotone, r.shrink);
    if !r.monotone || r.shrink < a.min_shrink {
        return Err(Failure::internal(format!(
            "scaling check failed: monotone={}, shrink={:.3} < {}",
            r.monotone, r.shrink, a.min_shrink
        )));
    }
    Ok(())
}

fn cmd_reduce(a: &ReduceArgs) -> Result<(), Failure> {
    let tp = match (a.k, a.c) {
        (None, None) => ThreePartitionInstance::from_values(a.z.clone())?,
        (k, c) => {
            let k = k.unwrap_or(a.z.len() / 3);
            let c = match c {
                Some(c) => c,
                None if k > 0 => a.z.iter().sum::<i64>() / k as i64,
                None => 0,
            };
            ThreePartitionInstance::new(a.z.clone(), k, c)?
        }
    };
    let pls = reduce_3partition(&tp);
    let doc = Document::Plain {
        instance: pls.to_instance(),
        truth: None,
    };
    a.out.write(&format!("{}\n", doc.to_json()))?;
    eprintln!("wrote {}x{} system", pls.n(), pls.d());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::SweepSnr(a) => cmd_sweep(a),
        Command::CheckOrderStats(a) => cmd_order_stats(a),
        Command::CheckW2(a) => cmd_w2(a),
        Command::Reduce(a) => cmd_reduce(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
