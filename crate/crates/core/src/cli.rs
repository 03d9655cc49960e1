//! The `jss` command line.
//!
//! Exit codes: 0 success, 1 usage (including unsupported solver
//! preconditions), 2 invalid instance, 3 verification failure.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};
use thiserror::Error;

use crate::conditions::{
    check_globally_bounded_weak_feedback, check_order_independence, check_regularity, strong_feedback_report,
    ConditionError, ConditionReport, ThresholdPolicy, DEFAULT_GBWF_CAP,
};
use crate::format::{read_instance, FormatError};
use crate::lab::{run_suite, LabConfig, LabError, Status, VerificationReport};
use crate::model::{Instance, ModelError, SearchOrder};
use crate::numeric::{format_exact, parse_exact, parse_grid, ParseNumberError, Scalar};
use crate::sim::{estimate_value, within_binomial};
use crate::solver::{self, monotone_order, payoff_sweep, prior_threshold_2box, SolveError, SolveOptions, SolveResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID_INSTANCE: i32 = 2;
pub const EXIT_FALSIFIED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "jss",
    version,
    about = "Optimal journal submission orders with informative rejections"
)]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "JSS_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal submission order, its value and every tied order.
    Solve(SolveArgs),
    /// Structural conditions with witnesses.
    Check(CheckArgs),
    /// Exact prior at which a two-journal optimum flips.
    Threshold(ThresholdArgs),
    /// Every order's value over a grid of priors, as CSV.
    Sweep(SweepArgs),
    /// Monte Carlo estimate of one order against the exact value.
    Simulate(SimulateArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// Instance JSON file.
    #[arg(long)]
    pub instance: PathBuf,
    /// Prior probability of high quality, overriding the file.
    #[arg(long)]
    pub prior: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Mode {
    #[default]
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum AlgorithmArg {
    #[default]
    Auto,
    Brute,
    Dp,
    Index,
    Local,
}

impl From<AlgorithmArg> for solver::Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Auto => solver::Algorithm::Auto,
            AlgorithmArg::Brute => solver::Algorithm::Brute,
            AlgorithmArg::Dp => solver::Algorithm::Dp,
            AlgorithmArg::Index => solver::Algorithm::Index,
            AlgorithmArg::Local => solver::Algorithm::Local,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum PolicyArg {
    Box1,
    #[default]
    MaxOverJournals,
    PerRemaining,
}

impl From<PolicyArg> for ThresholdPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Box1 => ThresholdPolicy::Box1,
            PolicyArg::MaxOverJournals => ThresholdPolicy::MaxOverJournals,
            PolicyArg::PerRemaining => ThresholdPolicy::PerRemaining,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InstanceArgs,
    #[arg(long, value_enum, default_value_t)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t)]
    pub algorithm: AlgorithmArg,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub input: InstanceArgs,
    /// Feedback threshold used by the bounded weak feedback check.
    #[arg(long, value_enum, default_value_t)]
    pub policy: PolicyArg,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub input: InstanceArgs,
    /// Only `exact` is accepted; thresholds are certified with rationals.
    #[arg(long, value_enum, default_value_t)]
    pub mode: Mode,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InstanceArgs,
    /// Inclusive grid `start:stop:step`.
    #[arg(long, default_value = "0:1:0.01")]
    pub grid: String,
    #[arg(long, value_enum, default_value_t)]
    pub mode: Mode,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InstanceArgs,
    /// Journal names or 1-based positions in payoff order, comma separated;
    /// defaults to the monotone order.
    #[arg(long)]
    pub order: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub episodes: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite name or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Trials per randomized claim; each claim has its own default.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Cap on the instance size drawn by the randomized claims.
    #[arg(long)]
    pub max_journals: Option<usize>,
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON reports to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("falsified: {}", .0.join(", "))]
    Falsified(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => EXIT_USAGE,
            CliError::Instance(_) | CliError::Solve(SolveError::Model(_)) => EXIT_INVALID_INSTANCE,
            CliError::Solve(_) => EXIT_USAGE,
            CliError::Falsified(_) => EXIT_FALSIFIED,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Instance(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Instance(e.to_string())
    }
}

impl From<ConditionError> for CliError {
    fn from(e: ConditionError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut out = std::io::stdout();
    match execute(&cli, &mut out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command inside a pool of `--threads` workers.
pub fn execute(cli: &Cli, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Solve(a) => cmd_solve(a, out),
        Command::Check(a) => cmd_check(a, out),
        Command::Threshold(a) => cmd_threshold(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    })
}

fn emit(out: &mut (dyn Write + Send), text: impl fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{text}").map_err(|source| CliError::Io {
        path: "<stdout>".into(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn number(flag: &str, text: &str) -> Result<BigRational, CliError> {
    parse_exact(text).map_err(|e: ParseNumberError| CliError::Usage(format!("{flag}: {e}")))
}

fn load(input: &InstanceArgs) -> Result<Instance, CliError> {
    let inst = read_instance(&input.instance)?;
    match &input.prior {
        Some(p) => Ok(inst.with_prior(number("--prior", p)?)?),
        None => Ok(inst),
    }
}

fn names(inst: &Instance, order: &SearchOrder) -> String {
    inst.order_names(order).join(",")
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

fn solve_json<S: Scalar>(inst: &Instance, r: &SolveResult<S>) -> Value {
    json!({
        "order": inst.order_names(&r.best_order),
        "positions": r.best_order.as_slice().iter().map(|j| j + 1).collect::<Vec<_>>(),
        "value": r.best_value.to_string(),
        "value_f64": r.best_value.to_f64(),
        "argmax": r.argmax_set.iter().map(|o| inst.order_names(o)).collect::<Vec<_>>(),
        "argmax_count": r.argmax_count,
        "argmax_truncated": r.argmax_truncated(),
        "method": r.method,
        "improving_swaps": r.improving_swaps,
        "prior_h": format_exact(inst.prior()),
    })
}

fn solve_text<S: Scalar>(inst: &Instance, r: &SolveResult<S>) -> String {
    let mut s = format!("order: {}\n", names(inst, &r.best_order));
    s.push_str(&format!("value: {} ({})\n", r.best_value, r.best_value.to_f64()));
    s.push_str(&format!(
        "argmax ({} order{}):",
        r.argmax_count,
        if r.argmax_count == 1 { "" } else { "s" }
    ));
    for o in &r.argmax_set {
        s.push_str(&format!(" {}", names(inst, o)));
    }
    if r.argmax_truncated() {
        s.push_str(" ...");
    }
    s.push_str(&format!("\nmethod: {}", r.method));
    if r.improving_swaps > 0 {
        s.push_str(&format!(" ({} improving swaps)", r.improving_swaps));
    }
    s
}

fn solve_in<S: Scalar>(inst: &Instance, args: &SolveArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let r = solver::solve::<S>(inst, args.algorithm.into(), &SolveOptions::default())?;
    if args.json {
        emit(out, solve_json(inst, &r))
    } else {
        emit(out, solve_text(inst, &r))
    }
}

pub fn cmd_solve(args: &SolveArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let inst = load(&args.input)?;
    match args.mode {
        Mode::Exact => solve_in::<BigRational>(&inst, args, out),
        Mode::Float => solve_in::<f64>(&inst, args, out),
    }
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

pub fn cmd_check(args: &CheckArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let inst = load(&args.input)?;
    let reports: Vec<ConditionReport> = vec![
        check_regularity(&inst),
        check_order_independence(&inst),
        check_globally_bounded_weak_feedback(&inst, args.policy.into(), DEFAULT_GBWF_CAP)?,
        strong_feedback_report(&inst),
    ];
    if args.json {
        let body: Vec<Value> = reports.iter().map(ConditionReport::to_json).collect();
        return emit(
            out,
            json!({ "prior_h": format_exact(inst.prior()), "distinct_u": inst.distinct_u(), "reports": body }),
        );
    }
    emit(out, format!("prior: {}", format_exact(inst.prior())))?;
    if !inst.distinct_u() {
        emit(out, "note: some journals share a payoff")?;
    }
    for r in &reports {
        emit(out, r)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// threshold
// ---------------------------------------------------------------------------

pub fn cmd_threshold(args: &ThresholdArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    if args.mode == Mode::Float {
        return Err(CliError::Usage("threshold certification needs --mode exact".into()));
    }
    let inst = load(&args.input)?;
    let t = prior_threshold_2box(&inst)?;
    if args.json {
        return emit(
            out,
            json!({
                "kind": t.kind,
                "mu_star": t.mu_star.as_ref().map(format_exact),
                "monotone_optimal": t.direction.map(|d| if d == solver::Side::Above { "above" } else { "below" }),
                "indifferent_everywhere": t.indifferent_everywhere,
                "gap_at_zero": format_exact(&t.gap_at_zero),
                "gap_at_one": format_exact(&t.gap_at_one),
            }),
        );
    }
    match &t.mu_star {
        Some(mu) => {
            emit(out, format_exact(mu))?;
            emit(out, format!("{t}"))
        }
        None => emit(out, t),
    }
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

pub fn cmd_sweep(args: &SweepArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let inst = load(&args.input)?;
    let grid = parse_grid(&args.grid).map_err(|e| CliError::Usage(format!("--grid: {e}")))?;
    let opts = SolveOptions::default();
    let csv = match args.mode {
        Mode::Exact => payoff_sweep::<BigRational>(&inst, &grid, &opts)?.to_csv(&inst),
        Mode::Float => payoff_sweep::<f64>(&inst, &grid, &opts)?.to_csv(&inst),
    };
    match &args.output {
        Some(path) => write_file(path, &csv),
        None => out.write_all(csv.as_bytes()).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// Parses `J2,J1` or `2,1` (1-based positions in payoff order).
pub fn parse_order(inst: &Instance, text: &str) -> Result<SearchOrder, CliError> {
    let perm = text
        .split(',')
        .map(|tok| {
            let tok = tok.trim();
            if let Some(i) = inst.journals().iter().position(|j| j.name == tok) {
                return Ok(i);
            }
            match tok.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(k - 1),
                _ => Err(CliError::Usage(format!("--order: unknown journal `{tok}`"))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    SearchOrder::new(perm, inst.len()).map_err(|e| CliError::Usage(format!("--order: {e}")))
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    if args.episodes == 0 {
        return Err(CliError::Usage("--episodes must be at least 1".into()));
    }
    let inst = load(&args.input)?;
    let order = match &args.order {
        Some(text) => parse_order(&inst, text)?,
        None => monotone_order(&inst),
    };
    let est = estimate_value(&inst, &order, args.episodes, args.seed)?;
    let trace = inst.model::<BigRational>().evaluate(&order)?;
    let exact = trace.total.to_f64();
    let freqs = est.counts.reach_frequencies();
    let periods: Vec<(usize, f64, f64, bool)> = trace
        .reach
        .iter()
        .zip(&freqs)
        .enumerate()
        .map(|(t, (r, f))| {
            let p = r.to_f64();
            (t + 1, *f, p, within_binomial(*f, p, args.episodes, 3.0))
        })
        .collect();
    let value_ok = est.within(exact, 3.0);
    if args.json {
        let survival: Vec<Value> = periods
            .iter()
            .map(|(t, f, p, ok)| json!({ "period": t, "frequency": f, "analytic": p, "within_3sd": ok }))
            .collect();
        return emit(
            out,
            json!({
                "order": inst.order_names(&order),
                "episodes": args.episodes,
                "seed": args.seed,
                "mean": est.mean,
                "stderr": est.stderr,
                "sample_mean_exact": format_exact(&est.exact_mean),
                "value": format_exact(&trace.total),
                "value_f64": exact,
                "within_3se": value_ok,
                "survival": survival,
            }),
        );
    }
    emit(out, format!("order: {}", names(&inst, &order)))?;
    emit(out, format!("episodes: {} (seed {})", args.episodes, args.seed))?;
    let se = est.stderr.map_or_else(|| "none".to_string(), |s| format!("{s:.6}"));
    emit(out, format!("mean: {:.6} (stderr {se})", est.mean))?;
    emit(
        out,
        format!(
            "exact value: {} ({exact:.6}), within 3 se: {}",
            format_exact(&trace.total),
            yes(value_ok)
        ),
    )?;
    emit(out, "period  reached   analytic  within 3 sd")?;
    for (t, f, p, ok) in periods {
        emit(out, format!("{t:>6}  {f:.6}  {p:.6}  {}", yes(ok)))?;
    }
    Ok(())
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

pub fn cmd_verify(args: &VerifyArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let config = LabConfig {
        trials: args.trials,
        seed: args.seed,
        max_journals: args.max_journals,
    };
    let reports = run_suite(&args.suite, &config)?;
    let body = Value::Array(reports.iter().map(VerificationReport::to_json).collect());
    if let Some(path) = &args.output {
        write_file(path, &serde_json::to_string_pretty(&body).expect("json"))?;
    }
    if args.json {
        emit(out, &body)?;
    } else {
        for r in &reports {
            write!(out, "{}", r.to_text()).map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })?;
        }
    }
    let falsified: Vec<String> = reports
        .iter()
        .filter(|r| r.status == Status::Falsified)
        .map(|r| r.claim.clone())
        .collect();
    if falsified.is_empty() {
        Ok(())
    } else {
        Err(CliError::Falsified(falsified))
    }
}
