//! Layer-wise training of unrolled schedules and the recurrent-tail grid search.

use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LrmcError, Result};
use crate::matops::soft_threshold;
use crate::problems::{SyntheticInstance, SyntheticSpec};
use crate::schedules::{LearnedSchedule, ParamSchedule, RecurrentTail};
use crate::solver::{initialize_with, lrmc_step, solve, SolverState, StopRule};

/// Where training and evaluation instances come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDistribution {
    pub spec: SyntheticSpec,
    pub base_seed: u64,
    #[serde(default)]
    pub mode: SamplingMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    /// A new instance for every training step.
    #[default]
    Fresh,
    /// Cycle through a fixed pool of this many instances.
    Pool(usize),
}

const TRAIN_SALT: u64 = 0x7472_6169_6e00_0000;
const EVAL_SALT: u64 = 0x6576_616c_0000_0000;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl ProblemDistribution {
    pub fn new(spec: SyntheticSpec, base_seed: u64) -> Self {
        ProblemDistribution {
            spec,
            base_seed,
            mode: SamplingMode::Fresh,
        }
    }

    pub fn with_mode(mut self, mode: SamplingMode) -> Self {
        self.mode = mode;
        self
    }

    fn seed(&self, salt: u64, index: u64) -> u64 {
        splitmix(self.base_seed ^ splitmix(salt.wrapping_add(index)))
    }

    /// The instance used at training step `step`.
    pub fn training_instance(&self, step: usize) -> Result<SyntheticInstance> {
        let index = match self.mode {
            SamplingMode::Fresh => step,
            SamplingMode::Pool(0) => {
                return Err(LrmcError::param("mode", "pool size must be positive"));
            }
            SamplingMode::Pool(m) => step % m,
        };
        self.spec.generate(self.seed(TRAIN_SALT, index as u64))
    }

    /// `count` evaluation instances, disjoint from the training stream.
    pub fn eval_pool(&self, count: usize) -> Result<Vec<SyntheticInstance>> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| self.spec.generate(self.seed(EVAL_SALT, i)))
            .collect()
    }
}

/// `(lo, hi, step)` grid for β and φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lo: 0.1,
            hi: 1.0,
            step: 0.1,
        }
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((self.lo + i as f64 * self.step) * 1e10).round() / 1e10)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo <= self.hi && self.hi <= 1.0) {
            return Err(LrmcError::param("grid", format!("need 0 < lo <= hi <= 1, got [{}, {}]", self.lo, self.hi)));
        }
        if !(self.step > 0.0) {
            return Err(LrmcError::param("grid.step", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// FNN depth `K`.
    pub depth: usize,
    /// Horizon `K̄` for the recurrent-tail search.
    pub horizon: usize,
    pub steps_per_stage: usize,
    pub learning_rate: f64,
    pub fd_step: f64,
    pub fd_step_abs: f64,
    pub grid: GridSpec,
    pub eval_pool_size: usize,
    pub eta_min: f64,
    pub eta_max: f64,
    /// Initial step size for every layer.
    pub eta_init: f64,
    /// Percentile of `|Π_Ω Y|` used as the initial `ζ₀`.
    pub zeta0_percentile: f64,
    /// Ratio between consecutive initial thresholds.
    pub zeta_decay_init: f64,
    /// Weight of the newest loss in the running stage mean.
    pub smoothing: f64,
    /// Bound on `|∂ log f / ∂ log θ|` per step.
    pub clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::with_depth(10)
    }
}

impl TrainConfig {
    pub fn with_depth(depth: usize) -> Self {
        TrainConfig {
            depth,
            horizon: depth + 5,
            steps_per_stage: 200,
            learning_rate: 0.05,
            fd_step: 1e-3,
            fd_step_abs: 1e-8,
            grid: GridSpec::default(),
            eval_pool_size: 20,
            eta_min: 1e-3,
            eta_max: 1.5,
            eta_init: 0.5,
            zeta0_percentile: 90.0,
            zeta_decay_init: 0.65,
            smoothing: 0.1,
            clip: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon <= self.depth {
            return Err(LrmcError::param(
                "horizon",
                format!("K̄ = {} must exceed K = {}", self.horizon, self.depth),
            ));
        }
        let positive = [
            ("learning_rate", self.learning_rate),
            ("fd_step", self.fd_step),
            ("fd_step_abs", self.fd_step_abs),
            ("eta_min", self.eta_min),
            ("eta_init", self.eta_init),
            ("smoothing", self.smoothing),
            ("clip", self.clip),
            ("zeta_decay_init", self.zeta_decay_init),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LrmcError::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.eta_max >= self.eta_min) || !self.eta_max.is_finite() {
            return Err(LrmcError::param("eta_max", "must be finite and at least eta_min"));
        }
        if !(self.smoothing <= 1.0) {
            return Err(LrmcError::param("smoothing", "must lie in (0, 1]"));
        }
        if !(0.0..=100.0).contains(&self.zeta0_percentile) {
            return Err(LrmcError::param("zeta0_percentile", "must lie in [0, 100]"));
        }
        if self.steps_per_stage == 0 {
            return Err(LrmcError::param("steps_per_stage", "must be positive"));
        }
        if self.eval_pool_size == 0 {
            return Err(LrmcError::param("eval_pool_size", "must be positive"));
        }
        self.grid.validate()
    }
}

/// Loss of one training step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageLoss {
    pub stage: usize,
    pub step: usize,
    /// `‖L_k R_kᵀ − X⋆‖²_F` on this step's instance before the update.
    pub loss: f64,
    /// Exponentially weighted mean of `loss` within the stage.
    pub running: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub schedule: LearnedSchedule,
    pub losses: Vec<StageLoss>,
    /// Steps rejected by the divergence guard.
    pub rejected_steps: usize,
}

impl TrainOutput {
    pub fn stage_csv(&self) -> String {
        let mut out = String::from("stage,step,loss\n");
        for l in &self.losses {
            out.push_str(&format!("{},{},{:e}\n", l.stage, l.step, l.loss));
        }
        out
    }

    /// Running mean at the first and last step of `stage`.
    pub fn stage_running(&self, stage: usize) -> Option<(f64, f64)> {
        let mut it = self.losses.iter().filter(|l| l.stage == stage);
        let first = it.next()?.running;
        let last = it.next_back().map_or(first, |l| l.running);
        Some((first, last))
    }

    /// Mean loss over the first `window` steps of `stage` and the running
    /// mean at its last step. The running mean starts from one sample, so
    /// the window mean is the steadier reference for the stage start.
    pub fn stage_progress(&self, stage: usize, window: usize) -> Option<(f64, f64)> {
        let steps: Vec<&StageLoss> = self.losses.iter().filter(|l| l.stage == stage).collect();
        let head = &steps[..window.max(1).min(steps.len())];
        if head.is_empty() {
            return None;
        }
        let start = head.iter().map(|l| l.loss).sum::<f64>() / head.len() as f64;
        Some((start, steps.last()?.running))
    }
}

/// Central differences over `theta`.
///
/// `probe(i, v)` evaluates the objective with coordinate `i` replaced by `v`.
/// Coordinates whose probes are not finite get a zero entry and a `true` flag.
pub fn fd_gradient<F>(theta: &[f64], fd_step: f64, fd_step_abs: f64, probe: F) -> (Vec<f64>, Vec<bool>)
where
    F: Fn(usize, f64) -> f64 + Sync,
{
    theta
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let h = (fd_step * t.abs()).max(fd_step_abs);
            let up = probe(i, t + h);
            let down = probe(i, t - h);
            let g = (up - down) / (2.0 * h);
            if g.is_finite() {
                (g, false)
            } else {
                (0.0, true)
            }
        })
        .unzip()
}

/// Active parameters of stage `k` laid out as `[ζ₀..ζ_k, η₁..η_k]`.
fn pack(schedule: &LearnedSchedule, k: usize) -> Vec<f64> {
    let mut theta = schedule.zeta()[..=k].to_vec();
    theta.extend_from_slice(&schedule.eta()[..k]);
    theta
}

fn layer_params(theta: &[f64], k: usize, layer: usize) -> (f64, f64) {
    (theta[layer], theta[k + layer])
}

fn sq_error(state: &SolverState, inst: &SyntheticInstance) -> f64 {
    let x = inst.truth.xstar();
    let mut sq = 0.0;
    for i in 0..x.rows() {
        let li = state.factors.l.row(i);
        for (j, &xs) in x.row(i).iter().enumerate() {
            let d = crate::matops::dot(li, state.factors.r.row(j)) - xs;
            sq += d * d;
        }
    }
    sq
}

fn init_state(inst: &SyntheticInstance, zeta0: f64) -> Result<SolverState> {
    let y = &inst.observed;
    initialize_with(
        y,
        inst.truth.rank(),
        soft_threshold(y.data(), zeta0)?,
        &Default::default(),
    )
}

/// Runs layers `from+1..=k` of the unrolled network.
fn unroll(mut state: SolverState, inst: &SyntheticInstance, theta: &[f64], k: usize, from: usize) -> Result<SolverState> {
    for layer in from + 1..=k {
        let (zeta, eta) = layer_params(theta, k, layer);
        state = lrmc_step(&state, &inst.observed, zeta, eta)?;
    }
    Ok(state)
}

fn finite_or_inf(r: Result<f64>) -> f64 {
    match r {
        Ok(v) if v.is_finite() => v,
        _ => f64::INFINITY,
    }
}

/// Gradient of the stage-`k` loss with respect to the active parameters.
#[derive(Debug, Clone)]
pub struct ParamGradient {
    pub values: Vec<f64>,
    /// Coordinates whose perturbed loss was not finite.
    pub flagged: Vec<bool>,
    /// Loss at the unperturbed parameters.
    pub loss: f64,
}

/// Finite-difference gradient of `‖L_k R_kᵀ − X⋆‖²_F` over
/// `[ζ₀..ζ_k, η₁..η_k]`. Perturbing a layer-`j` parameter reuses the
/// unperturbed trajectory up to layer `j − 1`.
pub fn param_gradient(
    inst: &SyntheticInstance,
    schedule: &LearnedSchedule,
    k: usize,
    fd_step: f64,
    fd_step_abs: f64,
) -> Result<ParamGradient> {
    if k > schedule.depth() {
        return Err(LrmcError::param(
            "k",
            format!("stage {k} exceeds the schedule depth {}", schedule.depth()),
        ));
    }
    let theta = pack(schedule, k);
    let mut trajectory = Vec::with_capacity(k + 1);
    trajectory.push(init_state(inst, theta[0])?);
    for layer in 1..=k {
        let (zeta, eta) = layer_params(&theta, k, layer);
        let next = lrmc_step(&trajectory[layer - 1], &inst.observed, zeta, eta)?;
        trajectory.push(next);
    }
    let loss = sq_error(&trajectory[k], inst);

    let probe = |i: usize, v: f64| -> f64 {
        let mut t = theta.clone();
        t[i] = v;
        let layer = if i <= k { i } else { i - k };
        let run = || -> Result<f64> {
            let state = if layer == 0 {
                unroll(init_state(inst, t[0])?, inst, &t, k, 0)?
            } else {
                unroll(trajectory[layer - 1].clone(), inst, &t, k, layer - 1)?
            };
            Ok(sq_error(&state, inst))
        };
        finite_or_inf(run())
    };
    let (values, flagged) = fd_gradient(&theta, fd_step, fd_step_abs, probe);
    Ok(ParamGradient { values, flagged, loss })
}

fn percentile(mut values: Vec<f64>, q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    if values.is_empty() {
        return 0.0;
    }
    let pos = q / 100.0 * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    values[lo] + (values[hi] - values[lo]) * (pos - lo as f64)
}

/// Initial FNN parameters before any training.
pub fn initial_schedule(first: &SyntheticInstance, cfg: &TrainConfig) -> Result<LearnedSchedule> {
    let mags: Vec<f64> = first.observed.data().values().iter().map(|v| v.abs()).collect();
    let zeta0 = percentile(mags, cfg.zeta0_percentile);
    let zeta = (0..=cfg.depth)
        .map(|k| zeta0 * cfg.zeta_decay_init.powi(k as i32))
        .collect();
    LearnedSchedule::new(zeta, vec![cfg.eta_init; cfg.depth], None)
}

const MAX_REJECTIONS: usize = 10;

/// Layer-wise training: stage `k` fits every parameter through layer `k`
/// to `‖L_k R_kᵀ − X⋆‖²_F`, one instance per step.
///
/// Each step moves `log θ` against the gradient of `log f`, clipped
/// coordinate-wise, so one learning rate serves every stage even though the
/// loss shrinks by orders of magnitude from stage to stage.
pub fn layerwise_train(dist: &ProblemDistribution, cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    let first = dist.training_instance(0)?;
    let mut schedule = initial_schedule(&first, cfg)?;
    let mut losses = Vec::with_capacity((cfg.depth + 1) * cfg.steps_per_stage);
    let mut rejected_steps = 0;
    let mut step_index = 0;

    for stage in 0..=cfg.depth {
        if stage > 0 {
            // a new layer starts below the trained threshold of its predecessor
            let mut zeta = schedule.zeta().to_vec();
            zeta[stage] = zeta[stage].min(zeta[stage - 1] * cfg.zeta_decay_init);
            schedule = LearnedSchedule::new(zeta, schedule.eta().to_vec(), None)?;
        }
        let mut lr = cfg.learning_rate;
        let mut rejections = 0;
        let mut running: Option<f64> = None;
        let mut step = 0;
        while step < cfg.steps_per_stage {
            let inst = dist.training_instance(step_index)?;
            step_index += 1;
            let grad = param_gradient(&inst, &schedule, stage, cfg.fd_step, cfg.fd_step_abs);
            let accepted = match grad {
                Ok(g) if g.loss.is_finite() && g.loss > 0.0 => {
                    let theta = pack(&schedule, stage);
                    let mut next = theta.clone();
                    for (i, (t, d)) in theta.iter().zip(&g.values).enumerate() {
                        let elasticity = (t * d / g.loss).clamp(-cfg.clip, cfg.clip);
                        let mut v = t * (-lr * elasticity).exp();
                        if i > stage {
                            v = v.clamp(cfg.eta_min, cfg.eta_max);
                        } else {
                            v = v.max(0.0);
                        }
                        next[i] = v;
                    }
                    let candidate = unpack(&schedule, &next, stage)?;
                    let check = param_gradient_loss(&inst, &candidate, stage);
                    if check.is_finite() {
                        schedule = candidate;
                        Some(g.loss)
                    } else {
                        None
                    }
                }
                // the instance already sits at the exact solution
                Ok(g) if g.loss == 0.0 => Some(0.0),
                _ => None,
            };
            match accepted {
                Some(loss) => {
                    rejections = 0;
                    let r = match running {
                        None => loss,
                        Some(prev) => (1.0 - cfg.smoothing) * prev + cfg.smoothing * loss,
                    };
                    running = Some(r);
                    losses.push(StageLoss {
                        stage,
                        step,
                        loss,
                        running: r,
                    });
                    step += 1;
                }
                None => {
                    rejections += 1;
                    rejected_steps += 1;
                    lr *= 0.5;
                    if rejections >= MAX_REJECTIONS {
                        return Err(LrmcError::TrainingDiverged {
                            stage,
                            message: format!(
                                "{MAX_REJECTIONS} consecutive non-finite steps at step {step}; \
                                 learning rate fell to {lr:e}; zeta = {:?}, eta = {:?}",
                                schedule.zeta(),
                                schedule.eta()
                            ),
                        });
                    }
                }
            }
        }
    }
    Ok(TrainOutput {
        schedule,
        losses,
        rejected_steps,
    })
}

fn unpack(base: &LearnedSchedule, theta: &[f64], k: usize) -> Result<LearnedSchedule> {
    let mut zeta = base.zeta().to_vec();
    let mut eta = base.eta().to_vec();
    zeta[..=k].copy_from_slice(&theta[..=k]);
    eta[..k].copy_from_slice(&theta[k + 1..]);
    LearnedSchedule::new(zeta, eta, base.rnn())
}

fn param_gradient_loss(inst: &SyntheticInstance, schedule: &LearnedSchedule, k: usize) -> f64 {
    let theta = pack(schedule, k);
    finite_or_inf(init_state(inst, theta[0]).and_then(|s| unroll(s, inst, &theta, k, 0)).map(|s| sq_error(&s, inst)))
}

/// Result of the recurrent-tail search.
#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub tail: RecurrentTail,
    pub mean_loss: f64,
    /// Every evaluated `(β, φ, mean loss)`, β-major.
    pub table: Vec<(f64, f64, f64)>,
}

impl GridOutcome {
    pub fn csv(&self) -> String {
        let mut out = String::from("beta,phi,mean_loss\n");
        for (b, p, l) in &self.table {
            out.push_str(&format!("{b},{p},{l:e}\n"));
        }
        out
    }
}

/// Mean `‖L_K̄ R_K̄ᵀ − X⋆‖²_F` over `pool` for every `(β, φ)` on the grid.
/// The FNN part is run once per instance. Ties go to larger β, then larger φ.
pub fn grid_search_rnn(
    fnn: &LearnedSchedule,
    pool: &[SyntheticInstance],
    horizon: usize,
    grid: &GridSpec,
) -> Result<GridOutcome> {
    grid.validate()?;
    let k = fnn.depth();
    if horizon <= k {
        return Err(LrmcError::param(
            "horizon",
            format!("K̄ = {horizon} must exceed K = {k}"),
        ));
    }
    if pool.is_empty() {
        return Err(LrmcError::param("pool", "needs at least one instance"));
    }
    let theta = pack(fnn, k);
    let base: Vec<Option<SolverState>> = pool
        .par_iter()
        .map(|inst| init_state(inst, theta[0]).and_then(|s| unroll(s, inst, &theta, k, 0)).ok())
        .collect();

    let points = grid.points();
    let mut table = Vec::with_capacity(points.len() * points.len());
    for &beta in &points {
        for &phi in &points {
            let tail = RecurrentTail { beta, phi };
            let schedule = fnn.clone().with_rnn(tail)?;
            let losses: Vec<f64> = pool
                .par_iter()
                .zip(&base)
                .map(|(inst, start)| {
                    let Some(start) = start else {
                        return f64::INFINITY;
                    };
                    let run = || -> Result<f64> {
                        let mut state = start.clone();
                        for layer in k + 1..=horizon {
                            let (zeta, eta) = schedule.param_at(layer)?;
                            state = lrmc_step(&state, &inst.observed, zeta, eta)?;
                        }
                        Ok(sq_error(&state, inst))
                    };
                    finite_or_inf(run())
                })
                .collect();
            let mean = losses.iter().sum::<f64>() / losses.len() as f64;
            table.push((beta, phi, if mean.is_finite() { mean } else { f64::INFINITY }));
        }
    }

    let mut best: Option<(f64, f64, f64)> = None;
    for &(b, p, l) in table.iter().rev() {
        if l.is_finite() && best.is_none_or(|(_, _, bl)| l < bl) {
            best = Some((b, p, l));
        }
    }
    let (beta, phi, mean_loss) =
        best.ok_or_else(|| LrmcError::SearchFailure("every grid point produced a non-finite loss".into()))?;
    Ok(GridOutcome {
        tail: RecurrentTail { beta, phi },
        mean_loss,
        table,
    })
}

/// Stop rule and reporting point for [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub tol: f64,
    pub max_iters: usize,
    /// Iteration whose relative error is averaged.
    pub report_k: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            tol: 1e-6,
            max_iters: 500,
            report_k: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Mean relative error at `report_k`; runs that stopped earlier
    /// contribute their final error.
    pub mean_rel_err: f64,
    /// Mean iterations to reach `tol` over the successful runs.
    pub mean_iterations: Option<f64>,
    pub successes: usize,
    pub trials: usize,
}

impl EvalReport {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// Solves every pool instance with a ground-truth stop and aggregates.
/// A learned schedule without a tail is capped at its depth; runs that
/// fail numerically count as failures.
pub fn evaluate(schedule: &ParamSchedule, pool: &[SyntheticInstance], cfg: &EvalConfig) -> Result<EvalReport> {
    schedule.validate()?;
    if pool.is_empty() {
        return Err(LrmcError::param("pool", "needs at least one instance"));
    }
    let cap = match schedule {
        ParamSchedule::Learned(l) if l.rnn().is_none() => cfg.max_iters.min(l.depth()),
        _ => cfg.max_iters,
    };
    let stop = StopRule::truth_relative(cfg.tol).with_max_iters(cap.max(1));
    let runs: Vec<(f64, Option<usize>)> = pool
        .par_iter()
        .map(|inst| {
            let r = inst.truth.rank();
            match solve(&inst.observed, r, schedule, stop, Some(&inst.truth)) {
                Ok(out) => {
                    let errs: Vec<f64> = out.trace.rel_errors().into_iter().flatten().collect();
                    let at_k = errs.get(cfg.report_k).or(errs.last()).copied().unwrap_or(f64::NAN);
                    (at_k, out.converged.then(|| out.trace.iterations()))
                }
                Err(_) => (f64::NAN, None),
            }
        })
        .collect();
    let finite: Vec<f64> = runs.iter().map(|r| r.0).filter(|v| v.is_finite()).collect();
    let mean_rel_err = if finite.len() == runs.len() {
        finite.iter().sum::<f64>() / finite.len() as f64
    } else {
        f64::INFINITY
    };
    let iters: Vec<usize> = runs.iter().filter_map(|r| r.1).collect();
    Ok(EvalReport {
        mean_rel_err,
        mean_iterations: (!iters.is_empty()).then(|| iters.iter().sum::<usize>() as f64 / iters.len() as f64),
        successes: iters.len(),
        trials: pool.len(),
    })
}

/// Relative error `‖X_k − X⋆‖_F / ‖X⋆‖_F` after exactly `k` iterations of
/// `schedule`, per instance.
pub fn rel_errors_at(schedule: &ParamSchedule, pool: &[SyntheticInstance], k: usize) -> Vec<f64> {
    pool.par_iter()
        .map(|inst| {
            solve(&inst.observed, inst.truth.rank(), schedule, StopRule::iterations(k), Some(&inst.truth))
                .ok()
                .and_then(|o| o.trace.last().and_then(|r| r.rel_err))
                .unwrap_or(f64::INFINITY)
        })
        .collect()
}

/// Full pipeline: layer-wise FNN training, then the tail search on a fresh
/// evaluation pool. Writes `schedule.json`, `stage_loss.csv` and `grid.csv`
/// into `out_dir` when given.
pub fn train_frmnn(
    dist: &ProblemDistribution,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<(LearnedSchedule, TrainOutput, GridOutcome)> {
    let trained = layerwise_train(dist, cfg)?;
    let pool = dist.eval_pool(cfg.eval_pool_size)?;
    let grid = grid_search_rnn(&trained.schedule, &pool, cfg.horizon, &cfg.grid)?;
    let schedule = trained.schedule.clone().with_rnn(grid.tail)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        crate::schedules::save(&ParamSchedule::Learned(schedule.clone()), dir.join("schedule.json"))?;
        std::fs::File::create(dir.join("stage_loss.csv"))?.write_all(trained.stage_csv().as_bytes())?;
        std::fs::File::create(dir.join("grid.csv"))?.write_all(grid.csv().as_bytes())?;
    }
    Ok((schedule, trained, grid))
}
