//! Command-line front end: `generate`, `solve`, `train` and `bench`.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bench::{run_suite, BenchConfig, Suite};
use crate::error::{LrmcError, Result};
use crate::matops::DenseMatrix;
use crate::problems::{
    generate_synthetic, load_observed, load_sparse_csv, save_dense_csv, save_observed_csv, save_sparse_csv,
    GroundTruth, ObservedMatrix, SyntheticInstance, SyntheticSpec,
};
use crate::schedules::{self, ParamSchedule};
use crate::solver::{solve_with, SolveOptions, SparseEstimate, StopRule, DEFAULT_MAX_ITERS};
use crate::training::{train_frmnn, ProblemDistribution, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub const THREADS_ENV: &str = "LRMC_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// Fixed summation order.
    #[default]
    Deterministic,
    /// Accepted for compatibility; kernels use the same fixed order.
    Fast,
}

#[derive(Debug, Parser)]
#[command(name = "lrmc", version, about = "Robust matrix completion with learned soft-thresholding")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (overrides LRMC_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub reduction: Option<Reduction>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic instance: Y.csv, truth.json, sstar.csv.
    Generate(GenerateArgs),
    /// Recover a low-rank matrix from an observed CSV.
    Solve(SolveArgs),
    /// Train a feed-forward schedule and search its recurrent tail.
    Train(TrainArgs),
    /// Run a benchmark suite and emit its CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub n2: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, value_parser = parse_rate)]
    pub p: Option<f64>,
    #[arg(long, value_parser = parse_fraction)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Observed matrix CSV (empty cells are unobserved).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub rank: Option<usize>,
    /// Schedule file, `fixed:ZETA,ETA` or `oracle[:ETA]`.
    #[arg(long)]
    pub schedule: Option<String>,
    /// `gt:TOL`, `succ:TOL` or `iters:K`.
    #[arg(long)]
    pub stop: Option<String>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// truth.json written by `generate` (sstar.csv is read from the same directory).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fill the `ms` trace column.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, value_parser = parse_rate)]
    pub p: Option<f64>,
    #[arg(long, value_parser = parse_fraction)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Feed-forward depth K.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Tail search horizon K̄ (default K + 5).
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub eval_pool: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(value_parser = parse_suite)]
    pub suite: Suite,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_rate)]
    pub p: Option<f64>,
    #[arg(long, value_parser = parse_fraction)]
    pub alpha: Option<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_fraction)]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_rate)]
    pub ps: Option<Vec<f64>>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Schedule file used for LRMC instead of the oracle.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_rate(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1], got {v}"))
    }
}

fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("must lie in [0, 1], got {v}"))
    }
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: LrmcError| e.to_string())
}

/// Settings file accepted by `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub reduction: Option<Reduction>,
    pub generate: Option<SyntheticSpec>,
    pub solve: Option<SolveSection>,
    pub train: Option<TrainSection>,
    pub bench: Option<BenchConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    pub input: Option<PathBuf>,
    pub rank: Option<usize>,
    pub schedule: Option<String>,
    pub stop: Option<String>,
    pub max_iters: Option<usize>,
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub distribution: SyntheticSpec,
    #[serde(default)]
    pub config: TrainConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| {
            LrmcError::Configuration(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column()))
        })
    }
}

/// Exit status for `err`.
pub fn exit_code(err: &LrmcError) -> i32 {
    match err {
        LrmcError::InvalidParameter { .. } | LrmcError::InvalidShape(_) | LrmcError::InvalidRank(_) => EXIT_USAGE,
        LrmcError::Configuration(_)
        | LrmcError::ScheduleExhausted { .. }
        | LrmcError::Format { .. }
        | LrmcError::Schema { .. }
        | LrmcError::Io(_) => EXIT_CONFIG,
        LrmcError::NumericalFailure(_)
        | LrmcError::SingularFactor { .. }
        | LrmcError::RankCollapse(_)
        | LrmcError::SearchFailure(_)
        | LrmcError::TrainingDiverged { .. } => EXIT_NUMERICAL,
    }
}

/// Parses `args` (including the program name) and runs the command.
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
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn usage(msg: impl Into<String>) -> LrmcError {
    LrmcError::InvalidParameter {
        name: "arguments",
        reason: msg.into(),
    }
}

fn configure_threads(flag: Option<usize>, config: Option<usize>) -> Result<()> {
    let env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.parse::<usize>()
                .map_err(|_| LrmcError::Configuration(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
        ),
        Err(_) => None,
    };
    let Some(n) = flag.or(env).or(config) else {
        return Ok(());
    };
    if n == 0 {
        return Err(usage("--threads must be positive"));
    }
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    configure_threads(cli.threads, config.threads)?;
    let _reduction = cli.reduction.or(config.reduction).unwrap_or_default();
    match cli.command {
        Command::Generate(a) => cmd_generate(a, &config),
        Command::Solve(a) => cmd_solve(a, &config),
        Command::Train(a) => cmd_train(a, &config),
        Command::Bench(a) => cmd_bench(a, &config),
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| usage(format!("missing --{flag}")))
}

fn out_dir(flag: Option<PathBuf>, config: &RunConfig) -> Result<PathBuf> {
    let dir = required(flag.or_else(|| config.out.clone()), "out")?;
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Truth metadata written next to `Y.csv`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruthFile {
    n1: usize,
    n2: usize,
    rank: usize,
    p: f64,
    alpha: f64,
    seed: u64,
    mu: f64,
    kappa: f64,
    sigma_r: f64,
    lstar: Vec<Vec<f64>>,
    rstar: Vec<Vec<f64>>,
}

fn rows_of(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn write_instance(inst: &SyntheticInstance, dir: &Path) -> Result<()> {
    let t = &inst.truth;
    let (n1, n2) = inst.observed.shape();
    save_observed_csv(&inst.observed, dir.join("Y.csv"))?;
    save_sparse_csv(t.sstar.as_masked(), dir.join("sstar.csv"))?;
    let file = TruthFile {
        n1,
        n2,
        rank: t.rank(),
        p: inst.observed.p(),
        alpha: t.alpha,
        seed: inst.seed,
        mu: t.mu,
        kappa: t.kappa,
        sigma_r: t.sigma_r,
        lstar: rows_of(&t.lstar),
        rstar: rows_of(&t.rstar),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("truth serializes");
    text.push('\n');
    fs::write(dir.join("truth.json"), text)?;
    Ok(())
}

pub fn read_truth(path: &Path, y: &ObservedMatrix) -> Result<GroundTruth> {
    let text = fs::read_to_string(path)?;
    let file: TruthFile = serde_json::from_str(&text)
        .map_err(|e| LrmcError::schema(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    if (file.n1, file.n2) != y.shape() {
        return Err(LrmcError::Configuration(format!(
            "truth is {}x{} but the observations are {}x{}",
            file.n1,
            file.n2,
            y.shape().0,
            y.shape().1
        )));
    }
    let lstar = DenseMatrix::from_rows(&file.lstar)?;
    let rstar = DenseMatrix::from_rows(&file.rstar)?;
    let sstar_path = path.with_file_name("sstar.csv");
    let sstar = load_sparse_csv(&sstar_path, y.omega().clone())?;
    GroundTruth::new(lstar, rstar, SparseEstimate::new(sstar), file.alpha)
}

fn cmd_generate(a: GenerateArgs, config: &RunConfig) -> Result<()> {
    let base = config.generate;
    let n1 = required(a.n1.or(base.map(|s| s.n1)), "n1")?;
    let n2 = required(a.n2.or(base.map(|s| s.n2)), "n2")?;
    let rank = required(a.rank.or(base.map(|s| s.rank)), "rank")?;
    let p = required(a.p.or(base.map(|s| s.p)), "p")?;
    let alpha = a.alpha.or(base.map(|s| s.alpha)).unwrap_or(0.0);
    let seed = a.seed.or(config.seed).unwrap_or(0);
    let dir = out_dir(a.out, config)?;
    let inst = generate_synthetic(n1, n2, rank, p, alpha, seed)?;
    write_instance(&inst, &dir)?;
    println!(
        "wrote {}: {n1}x{n2} rank {rank}, p = {:.4}, {} outliers, mu = {:.3}, kappa = {:.3}",
        dir.display(),
        inst.observed.p(),
        inst.truth.sstar.nnz(),
        inst.truth.mu,
        inst.truth.kappa
    );
    Ok(())
}

/// Parses `fixed:ZETA,ETA`, `oracle`, `oracle:ETA` or a schedule file path.
pub fn parse_schedule(spec: &str) -> Result<ParamSchedule> {
    if let Some(rest) = spec.strip_prefix("fixed:") {
        let (z, e) = rest
            .split_once(',')
            .ok_or_else(|| usage(format!("--schedule {spec:?}: expected fixed:ZETA,ETA")))?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| usage(format!("--schedule {spec:?}: bad number {s:?}")));
        return ParamSchedule::fixed(num(z)?, num(e)?).map_err(|e| usage(format!("--schedule {spec:?}: {e}")));
    }
    if spec == "oracle" {
        return ParamSchedule::oracle(0.5);
    }
    if let Some(rest) = spec.strip_prefix("oracle:") {
        let eta = rest
            .parse::<f64>()
            .map_err(|_| usage(format!("--schedule {spec:?}: bad step size")))?;
        return ParamSchedule::oracle(eta).map_err(|e| usage(format!("--schedule {spec:?}: {e}")));
    }
    schedules::load(spec)
}

/// Parses `gt:TOL`, `succ:TOL` or `iters:K`.
pub fn parse_stop(spec: &str, max_iters: Option<usize>) -> Result<StopRule> {
    let (kind, value) = spec
        .split_once(':')
        .ok_or_else(|| usage(format!("--stop {spec:?}: expected gt:TOL, succ:TOL or iters:K")))?;
    let tol = || value.parse::<f64>().map_err(|_| usage(format!("--stop {spec:?}: bad tolerance")));
    let rule = match kind {
        "gt" => StopRule::truth_relative(tol()?),
        "succ" => StopRule::successive(tol()?),
        "iters" => StopRule::iterations(
            value
                .parse()
                .map_err(|_| usage(format!("--stop {spec:?}: bad iteration count")))?,
        ),
        _ => return Err(usage(format!("--stop {spec:?}: unknown rule {kind:?}"))),
    };
    let rule = match max_iters {
        Some(m) => rule.with_max_iters(m),
        None => rule,
    };
    rule.validate()?;
    Ok(rule)
}

fn cmd_solve(a: SolveArgs, config: &RunConfig) -> Result<()> {
    let base = config.solve.clone().unwrap_or_default();
    let input = required(a.input.or(base.input), "input")?;
    let rank = required(a.rank.or(base.rank), "rank")?;
    let schedule = parse_schedule(&required(a.schedule.or(base.schedule), "schedule")?)?;
    let stop_spec = a.stop.or(base.stop).unwrap_or_else(|| format!("iters:{DEFAULT_MAX_ITERS}"));
    let stop = parse_stop(&stop_spec, a.max_iters.or(base.max_iters))?;
    let truth_path = a.truth.or(base.truth);
    let dir = out_dir(a.out, config)?;

    let y = load_observed(&input)?;
    let truth = truth_path.map(|p| read_truth(&p, &y)).transpose()?;
    let out = solve_with(&y, rank, &schedule, stop, truth.as_ref(), &SolveOptions::default(), &mut |_| {})?;

    out.trace.write_csv(dir.join("trace.csv"), a.timing)?;
    save_dense_csv(&out.factors.l, dir.join("L.csv"))?;
    save_dense_csv(&out.factors.r, dir.join("R.csv"))?;
    save_sparse_csv(out.sparse.as_masked(), dir.join("S.csv"))?;
    let last = out.trace.last().expect("trace has the initialization record");
    let rel = last.rel_err.map(|e| format!(", rel err {e:.3e}")).unwrap_or_default();
    println!(
        "{} after {} iterations{rel}, {} outliers",
        if out.converged { "converged" } else { "stopped" },
        last.k,
        last.supp_size
    );
    Ok(())
}

fn cmd_train(a: TrainArgs, config: &RunConfig) -> Result<()> {
    let base = config.train.clone();
    let spec0 = base.as_ref().map(|t| t.distribution);
    let (n1, n2) = match (a.n, spec0) {
        (Some(n), _) => (n, n),
        (None, Some(s)) => (s.n1, s.n2),
        (None, None) => return Err(usage("missing --n")),
    };
    let spec = SyntheticSpec {
        n1,
        n2,
        rank: required(a.rank.or(spec0.map(|s| s.rank)), "rank")?,
        p: a.p.or(spec0.map(|s| s.p)).unwrap_or(1.0),
        alpha: a.alpha.or(spec0.map(|s| s.alpha)).unwrap_or(0.1),
    };
    let mut cfg = base.map(|t| t.config).unwrap_or_default();
    if let Some(k) = a.depth {
        cfg.depth = k;
        cfg.horizon = k + 5;
    }
    if let Some(h) = a.horizon {
        cfg.horizon = h;
    }
    if let Some(s) = a.steps {
        cfg.steps_per_stage = s;
    }
    if let Some(lr) = a.learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(m) = a.eval_pool {
        cfg.eval_pool_size = m;
    }
    let seed = a.seed.or(config.seed).unwrap_or(0);
    let dir = out_dir(a.out, config)?;
    let dist = ProblemDistribution::new(spec, seed);
    let (schedule, trained, grid) = train_frmnn(&dist, &cfg, Some(&dir))?;
    println!(
        "trained K = {} over {} steps ({} rejected); tail beta = {}, phi = {} (mean loss {:.3e} at K̄ = {})",
        schedule.depth(),
        trained.losses.len(),
        trained.rejected_steps,
        grid.tail.beta,
        grid.tail.phi,
        grid.mean_loss,
        cfg.horizon
    );
    Ok(())
}

fn cmd_bench(a: BenchArgs, config: &RunConfig) -> Result<()> {
    let mut cfg = config.bench.clone().unwrap_or_default();
    if let Some(v) = a.n {
        cfg.n = v;
    }
    if let Some(v) = a.rank {
        cfg.rank = v;
    }
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.seed.or(config.seed) {
        cfg.base_seed = v;
    }
    if let Some(v) = a.p {
        cfg.p = v;
    }
    if let Some(v) = a.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = a.alphas {
        cfg.alphas = v;
    }
    if let Some(v) = a.ps {
        cfg.ps = v;
    }
    if let Some(v) = a.eta {
        cfg.eta = v;
    }
    if let Some(v) = a.max_iters {
        cfg.max_iters = v;
    }
    if let Some(path) = a.schedule {
        cfg.schedule = Some(schedules::load(path)?);
    }
    let csv = run_suite(a.suite, &cfg)?;
    match a.out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, csv)?;
        }
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(())
}
