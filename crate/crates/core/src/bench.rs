//! Desk-scale versions of the synthetic experiments.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LrmcError, Result};
use crate::problems::{generate_synthetic, SyntheticInstance, SyntheticSpec};
use crate::schedules::{LearnedSchedule, ParamSchedule};
use crate::matops::{soft_threshold, sparsify_top_fraction, SvdConfig};
use crate::solver::{
    initialize_with, lrmc_step, oracle_schedule, scaledgd_solve, scaledgd_step, solve_with, SolveOptions, SolveOutput,
    StopRule,
};
use crate::training::{grid_search_rnn, layerwise_train, rel_errors_at, ProblemDistribution, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    ConvAlpha,
    ItersVsP,
    Recoverability,
    RuntimeAlpha,
    UnfoldModels,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::ConvAlpha,
        Suite::ItersVsP,
        Suite::Recoverability,
        Suite::RuntimeAlpha,
        Suite::UnfoldModels,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::ConvAlpha => "conv-alpha",
            Suite::ItersVsP => "iters-vs-p",
            Suite::Recoverability => "recoverability",
            Suite::RuntimeAlpha => "runtime-alpha",
            Suite::UnfoldModels => "unfold-models",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = LrmcError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
                LrmcError::param("suite", format!("unknown suite {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Settings shared by every suite. Each suite reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub n: usize,
    pub rank: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub alphas: Vec<f64>,
    pub ps: Vec<f64>,
    /// Sampling rate for the suites that sweep α.
    pub p: f64,
    /// Outlier fraction for the suites that sweep p.
    pub alpha: f64,
    pub eta: f64,
    /// Stop tolerance for convergence and timing suites.
    pub tol: f64,
    /// Success threshold for the recoverability suite.
    pub success_tol: f64,
    pub max_iters: usize,
    /// Iterations timed by the runtime suite.
    pub timed_iters: usize,
    /// Iterations recorded by the convergence suites.
    pub trace_iters: usize,
    /// Baseline keep-fraction is `min(1, baseline_scale · α · p)`.
    pub baseline_scale: f64,
    /// LRMC schedule; the oracle with `eta` when absent.
    pub schedule: Option<ParamSchedule>,
    pub train: TrainConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n: 300,
            rank: 5,
            trials: 20,
            base_seed: 0,
            alphas: vec![0.1, 0.2, 0.3, 0.4],
            ps: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            p: 1.0,
            alpha: 0.1,
            eta: 0.5,
            tol: 1e-6,
            success_tol: 1e-4,
            max_iters: 500,
            timed_iters: 100,
            trace_iters: 80,
            baseline_scale: 1.0,
            schedule: None,
            train: TrainConfig::with_depth(10),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.rank == 0 || self.rank > self.n {
            return Err(LrmcError::param("rank", format!("need 0 < rank <= n, got rank {} for n {}", self.rank, self.n)));
        }
        if self.trials == 0 {
            return Err(LrmcError::param("trials", "must be positive"));
        }
        if !(self.baseline_scale > 0.0) {
            return Err(LrmcError::param("baseline_scale", "must be positive"));
        }
        if let Some(s) = &self.schedule {
            s.validate()?;
        }
        ParamSchedule::fixed(0.0, self.eta)?;
        Ok(())
    }

    fn lrmc_schedule(&self) -> Result<ParamSchedule> {
        match &self.schedule {
            Some(s) => Ok(s.clone()),
            None => ParamSchedule::oracle(self.eta),
        }
    }

    pub fn baseline_fraction(&self, alpha: f64, p: f64) -> f64 {
        (self.baseline_scale * alpha * p).min(1.0)
    }

    fn seed(&self, cell: u64, trial: usize) -> u64 {
        self.base_seed
            .wrapping_add(cell.wrapping_mul(1_000_003))
            .wrapping_add(trial as u64)
    }

    fn instances(&self, alpha: f64, p: f64, cell: u64) -> Result<Vec<SyntheticInstance>> {
        let spec = SyntheticSpec::square(self.n, self.rank, p, alpha);
        (0..self.trials)
            .into_par_iter()
            .map(|t| spec.generate(self.seed(cell, t)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Lrmc,
    ScaledGd,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lrmc => "lrmc",
            Method::ScaledGd => "scaledgd",
        }
    }
}

/// One solve of `method` on `inst`.
pub fn run_method(
    method: Method,
    inst: &SyntheticInstance,
    cfg: &BenchConfig,
    stop: StopRule,
    opts: &SolveOptions,
) -> Result<SolveOutput> {
    let (y, truth, r) = (&inst.observed, &inst.truth, inst.truth.rank());
    match method {
        Method::Lrmc => solve_with(y, r, &cfg.lrmc_schedule()?, stop, Some(truth), opts, &mut |_| {}),
        Method::ScaledGd => {
            let frac = cfg.baseline_fraction(truth.alpha, y.p());
            scaledgd_solve(y, r, frac, cfg.eta, stop, Some(truth), opts, &mut |_| {})
        }
    }
}

/// A CSV-renderable row.
pub trait CsvRow {
    const HEADER: &'static str;
    fn write_fields(&self, out: &mut String);
}

pub fn to_csv<T: CsvRow>(rows: &[T]) -> String {
    let mut out = String::from(T::HEADER);
    out.push('\n');
    for r in rows {
        r.write_fields(&mut out);
        out.push('\n');
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvRow {
    pub alpha: f64,
    pub method: Method,
    pub seed: u64,
    pub k: usize,
    pub rel_err: Option<f64>,
}

impl CsvRow for ConvRow {
    const HEADER: &'static str = "alpha,method,seed,k,rel_err";
    fn write_fields(&self, out: &mut String) {
        let _ = write!(out, "{},{},{},{},{}", self.alpha, self.method.name(), self.seed, self.k, opt(self.rel_err));
    }
}

/// Error curves for both methods across α at sampling rate `cfg.p`.
pub fn conv_alpha(cfg: &BenchConfig) -> Result<Vec<ConvRow>> {
    cfg.validate()?;
    let stop = StopRule::truth_relative(cfg.tol).with_max_iters(cfg.trace_iters);
    let mut rows = Vec::new();
    for (cell, &alpha) in cfg.alphas.iter().enumerate() {
        let pool = cfg.instances(alpha, cfg.p, cell as u64)?;
        for method in [Method::Lrmc, Method::ScaledGd] {
            let runs: Vec<Result<SolveOutput>> = pool
                .par_iter()
                .map(|inst| run_method(method, inst, cfg, stop, &SolveOptions::default()))
                .collect();
            for (inst, run) in pool.iter().zip(runs) {
                let out = run?;
                rows.extend(out.trace.records.iter().map(|r| ConvRow {
                    alpha,
                    method,
                    seed: inst.seed,
                    k: r.k,
                    rel_err: r.rel_err,
                }));
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItersRow {
    pub p: f64,
    pub method: Method,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    pub total_ms: f64,
}

impl CsvRow for ItersRow {
    const HEADER: &'static str = "p,method,seed,iterations,converged,total_ms";
    fn write_fields(&self, out: &mut String) {
        let _ = write!(
            out,
            "{},{},{},{},{},{:.3}",
            self.p,
            self.method.name(),
            self.seed,
            self.iterations,
            self.converged,
            self.total_ms
        );
    }
}

/// Iterations to `cfg.tol` across sampling rates at outlier fraction `cfg.alpha`.
pub fn iters_vs_p(cfg: &BenchConfig, methods: &[Method]) -> Result<Vec<ItersRow>> {
    cfg.validate()?;
    let stop = StopRule::truth_relative(cfg.tol).with_max_iters(cfg.max_iters);
    let mut rows = Vec::new();
    for (cell, &p) in cfg.ps.iter().enumerate() {
        let pool = cfg.instances(cfg.alpha, p, cell as u64)?;
        for &method in methods {
            let runs: Vec<Result<SolveOutput>> = pool
                .par_iter()
                .map(|inst| run_method(method, inst, cfg, stop, &SolveOptions::default()))
                .collect();
            for (inst, run) in pool.iter().zip(runs) {
                let out = run?;
                rows.push(ItersRow {
                    p,
                    method,
                    seed: inst.seed,
                    iterations: out.trace.iterations(),
                    converged: out.converged,
                    total_ms: out.trace.records.iter().map(|r| r.ms).sum(),
                });
            }
        }
    }
    Ok(rows)
}

/// Median iterations per `(p, method)`, in sweep order.
pub fn median_iterations(rows: &[ItersRow]) -> Vec<(f64, Method, f64)> {
    let mut keys: Vec<(f64, Method)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.p, r.method)) {
            keys.push((r.p, r.method));
        }
    }
    keys.into_iter()
        .map(|(p, m)| {
            let mut v: Vec<usize> = rows
                .iter()
                .filter(|r| r.p == p && r.method == m)
                .map(|r| r.iterations)
                .collect();
            v.sort_unstable();
            let mid = v.len() / 2;
            let med = if v.len() % 2 == 1 {
                v[mid] as f64
            } else {
                (v[mid - 1] + v[mid]) as f64 / 2.0
            };
            (p, m, med)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoverRow {
    pub alpha: f64,
    pub method: Method,
    pub p: f64,
    pub successes: usize,
    pub trials: usize,
}

impl CsvRow for RecoverRow {
    const HEADER: &'static str = "alpha,method,p,successes,trials";
    fn write_fields(&self, out: &mut String) {
        let _ = write!(out, "{},{},{},{},{}", self.alpha, self.method.name(), self.p, self.successes, self.trials);
    }
}

/// Successful recoveries (`rel err < cfg.success_tol` within `cfg.max_iters`)
/// per α at sampling rate `cfg.p`.
pub fn recoverability(cfg: &BenchConfig, methods: &[Method]) -> Result<Vec<RecoverRow>> {
    cfg.validate()?;
    let stop = StopRule::truth_relative(cfg.success_tol).with_max_iters(cfg.max_iters);
    let mut rows = Vec::new();
    for (cell, &alpha) in cfg.alphas.iter().enumerate() {
        let pool = cfg.instances(alpha, cfg.p, cell as u64)?;
        for &method in methods {
            let successes = pool
                .par_iter()
                .map(|inst| {
                    run_method(method, inst, cfg, stop, &SolveOptions::default())
                        .map(|o| o.converged)
                        .unwrap_or(false)
                })
                .filter(|ok| *ok)
                .count();
            rows.push(RecoverRow {
                alpha,
                method,
                p: cfg.p,
                successes,
                trials: pool.len(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeRow {
    pub alpha: f64,
    pub method: Method,
    pub p: f64,
    /// Mean over the timed steps.
    pub ms_per_iter: f64,
    pub median_ms: f64,
    pub iterations: usize,
}

impl CsvRow for RuntimeRow {
    const HEADER: &'static str = "alpha,method,p,ms_per_iter,median_ms,iterations";
    fn write_fields(&self, out: &mut String) {
        let _ = write!(
            out,
            "{},{},{},{:.4},{:.4},{}",
            self.alpha,
            self.method.name(),
            self.p,
            self.ms_per_iter,
            self.median_ms,
            self.iterations
        );
    }
}

/// One configuration for [`interleaved_step_times`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingCase {
    pub method: Method,
    pub alpha: f64,
    pub p: f64,
    pub seed: u64,
}

/// Wall time of single update steps, excluding initialization and the
/// threshold lookup. All cases are prepared first and then stepped in
/// round-robin order, so machine-load drift affects every case alike.
pub fn interleaved_step_times(cases: &[TimingCase], cfg: &BenchConfig) -> Result<Vec<RuntimeRow>> {
    let schedule = cfg.lrmc_schedule()?;
    let svd = SvdConfig::default();
    let mut runs = cases
        .iter()
        .map(|c| {
            let inst = generate_synthetic(cfg.n, cfg.n, cfg.rank, c.p, c.alpha, c.seed)?;
            let y = &inst.observed;
            let s0 = match c.method {
                Method::Lrmc => soft_threshold(y.data(), schedule.zeta0(Some(&inst.truth))?)?,
                Method::ScaledGd => sparsify_top_fraction(y.data(), cfg.baseline_fraction(c.alpha, y.p()))?,
            };
            let state = initialize_with(y, cfg.rank, s0, &svd)?;
            Ok((inst, state, Vec::with_capacity(cfg.timed_iters)))
        })
        .collect::<Result<Vec<_>>>()?;

    for k in 1..=cfg.timed_iters {
        for (c, (inst, state, times)) in cases.iter().zip(runs.iter_mut()) {
            let y = &inst.observed;
            let (clock, next) = match c.method {
                Method::Lrmc => {
                    let (zeta, eta) = match &schedule {
                        ParamSchedule::Oracle { eta } => {
                            (oracle_schedule(Some(&inst.truth), *eta)?.zeta_after(&state.factors), *eta)
                        }
                        other => other.param_at(k)?,
                    };
                    let clock = Instant::now();
                    (clock, lrmc_step(state, y, zeta, eta)?)
                }
                Method::ScaledGd => {
                    let frac = cfg.baseline_fraction(c.alpha, y.p());
                    let clock = Instant::now();
                    (clock, scaledgd_step(state, y, frac, cfg.eta)?)
                }
            };
            times.push(clock.elapsed().as_secs_f64() * 1e3);
            *state = next;
        }
    }

    Ok(cases
        .iter()
        .zip(runs)
        .map(|(c, (_, _, mut times))| {
            let n = times.len();
            let mean = if n == 0 { 0.0 } else { times.iter().sum::<f64>() / n as f64 };
            times.sort_by(f64::total_cmp);
            let median = match n {
                0 => 0.0,
                _ if n % 2 == 1 => times[n / 2],
                _ => 0.5 * (times[n / 2 - 1] + times[n / 2]),
            };
            RuntimeRow {
                alpha: c.alpha,
                method: c.method,
                p: c.p,
                ms_per_iter: mean,
                median_ms: median,
                iterations: n,
            }
        })
        .collect())
}

/// Step timing for a single configuration.
pub fn time_steps(method: Method, alpha: f64, p: f64, cfg: &BenchConfig, seed: u64) -> Result<RuntimeRow> {
    let case = TimingCase { method, alpha, p, seed };
    Ok(interleaved_step_times(&[case], cfg)?.remove(0))
}

/// Per-iteration time across α for both methods at sampling rate `cfg.p`.
pub fn runtime_alpha(cfg: &BenchConfig) -> Result<Vec<RuntimeRow>> {
    cfg.validate()?;
    let cases: Vec<TimingCase> = cfg
        .alphas
        .iter()
        .enumerate()
        .flat_map(|(cell, &alpha)| {
            [Method::Lrmc, Method::ScaledGd].map(|method| TimingCase {
                method,
                alpha,
                p: cfg.p,
                seed: cfg.seed(cell as u64, 0),
            })
        })
        .collect();
    interleaved_step_times(&cases, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldRow {
    pub model: &'static str,
    pub k: usize,
    pub mean_rel_err: f64,
}

impl CsvRow for UnfoldRow {
    const HEADER: &'static str = "model,k,mean_rel_err";
    fn write_fields(&self, out: &mut String) {
        let _ = write!(out, "{},{},{:e}", self.model, self.k, self.mean_rel_err);
    }
}

/// Trains FNN (depth `K`), RNN (depth 0 plus tail) and FRMNN (depth `K`
/// plus tail) on `α = cfg.alpha, p = cfg.p` and reports mean error per
/// iteration on held-out instances. FNN rows stop at `K`.
pub fn unfold_models(cfg: &BenchConfig) -> Result<Vec<UnfoldRow>> {
    cfg.validate()?;
    let spec = SyntheticSpec::square(cfg.n, cfg.rank, cfg.p, cfg.alpha);
    let dist = ProblemDistribution::new(spec, cfg.base_seed);
    let held_out = ProblemDistribution::new(spec, cfg.base_seed ^ 0x5eed).eval_pool(cfg.trials)?;
    let search_pool = dist.eval_pool(cfg.train.eval_pool_size)?;

    let fnn = layerwise_train(&dist, &cfg.train)?.schedule;
    let frmnn_tail = grid_search_rnn(&fnn, &search_pool, cfg.train.horizon, &cfg.train.grid)?.tail;
    let frmnn = fnn.clone().with_rnn(frmnn_tail)?;

    let rnn_cfg = TrainConfig {
        depth: 0,
        horizon: cfg.train.horizon - cfg.train.depth,
        ..cfg.train
    };
    let rnn_base = layerwise_train(&dist, &rnn_cfg)?.schedule;
    let rnn_tail = grid_search_rnn(&rnn_base, &search_pool, rnn_cfg.horizon, &cfg.train.grid)?.tail;
    let rnn = rnn_base.with_rnn(rnn_tail)?;

    let mut rows = Vec::new();
    let models: [(&'static str, &LearnedSchedule, usize); 3] = [
        ("fnn", &fnn, fnn.depth()),
        ("rnn", &rnn, cfg.trace_iters),
        ("frmnn", &frmnn, cfg.trace_iters),
    ];
    for (name, schedule, last) in models {
        let s = ParamSchedule::Learned(schedule.clone());
        for k in 0..=last {
            let errs = rel_errors_at(&s, &held_out, k);
            rows.push(UnfoldRow {
                model: name,
                k,
                mean_rel_err: errs.iter().sum::<f64>() / errs.len() as f64,
            });
        }
    }
    Ok(rows)
}

/// Runs `suite` and renders its CSV.
pub fn run_suite(suite: Suite, cfg: &BenchConfig) -> Result<String> {
    let both = [Method::Lrmc, Method::ScaledGd];
    Ok(match suite {
        Suite::ConvAlpha => to_csv(&conv_alpha(cfg)?),
        Suite::ItersVsP => to_csv(&iters_vs_p(cfg, &both)?),
        Suite::Recoverability => to_csv(&recoverability(cfg, &both)?),
        Suite::RuntimeAlpha => to_csv(&runtime_alpha(cfg)?),
        Suite::UnfoldModels => to_csv(&unfold_models(cfg)?),
    })
}
