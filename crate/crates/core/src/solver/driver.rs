use std::time::Instant;

use super::{FactorPair, SolveTrace, SolverState, SparseEstimate, StopKind, StopRule, TraceRecord};
use crate::error::{LrmcError, Result};
use crate::matops::{
    dot, fro_norm, gram, masked_residual, scaled_grad_step, soft_threshold, sparsify_top_fraction, truncated_svd,
    DenseMatrix, MaskedMatrix, SvdConfig,
};
use crate::problems::{GroundTruth, ObservedMatrix};
use crate::schedules::ParamSchedule;

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub svd: SvdConfig,
    /// Record `rel_err` and `supp_included` when ground truth is supplied.
    pub truth_metrics: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            svd: SvdConfig::default(),
            truth_metrics: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub factors: FactorPair,
    pub sparse: SparseEstimate,
    pub trace: SolveTrace,
    /// The stop rule's criterion was met (always true for fixed iterations
    /// that ran to completion).
    pub converged: bool,
}

/// Passed to solve observers after every completed iteration.
pub struct StepEvent<'a> {
    pub k: usize,
    pub prev: &'a SolverState,
    pub next: &'a SolverState,
    pub zeta: Option<f64>,
    pub eta: f64,
}

/// Spectral initialization with soft-thresholded outliers:
/// `S₀ = S_ζ₀(Π_Ω Y)`, `L₀ R₀ᵀ = SVD_r(p⁻¹ Π_Ω(Y − S₀))` split as `UΣ^½, VΣ^½`.
pub fn initialize(y: &ObservedMatrix, r: usize, zeta0: f64) -> Result<SolverState> {
    initialize_with(y, r, soft_threshold(y.data(), zeta0)?, &SvdConfig::default())
}

/// Spectral initialization from an explicit `S₀` (defined over `Ω`).
pub fn initialize_with(y: &ObservedMatrix, r: usize, s0: MaskedMatrix, svd_cfg: &SvdConfig) -> Result<SolverState> {
    let (n1, n2) = y.shape();
    if r == 0 || r > n1.min(n2) {
        return Err(LrmcError::InvalidRank(format!("rank {r} for a {n1}x{n2} problem")));
    }
    let scale = 1.0 / y.p();
    let mut target = y.data().sub(&s0)?;
    for v in target.values_mut() {
        *v *= scale;
    }
    let svd = truncated_svd(&target, r, svd_cfg)?;
    let sigma_1 = svd.sigma[0];
    let sigma_r = svd.sigma[r - 1];
    if !(sigma_r > sigma_1 * 1e-14) || !(sigma_r > 0.0) {
        return Err(LrmcError::RankCollapse(sigma_r));
    }
    let roots: Vec<f64> = svd.sigma.iter().map(|s| s.sqrt()).collect();
    let l = DenseMatrix::from_fn(n1, r, |i, j| svd.u.get(i, j) * roots[j]);
    let rr = DenseMatrix::from_fn(n2, r, |i, j| svd.v.get(i, j) * roots[j]);
    Ok(SolverState {
        factors: FactorPair::new(l, rr)?,
        sparse: SparseEstimate::new(s0),
        k: 0,
    })
}

/// Shared step: `S' = update(Π_Ω(Y − L Rᵀ))`, then the scaled factor update
/// driven by `Π_Ω(L Rᵀ + S' − Y)`.
fn step_with(
    state: &SolverState,
    y: &ObservedMatrix,
    eta: f64,
    update: impl FnOnce(&MaskedMatrix) -> Result<MaskedMatrix>,
) -> Result<SolverState> {
    let k = state.k + 1;
    let FactorPair { l, r } = &state.factors;
    let omega = y.omega();
    let gap_values = omega
        .iter()
        .zip(y.data().values())
        .map(|((i, j), v)| v - dot(l.row(i), r.row(j)))
        .collect();
    let gap = MaskedMatrix::new(omega.clone(), gap_values)
        .map_err(|_| LrmcError::NumericalFailure(format!("residual overflowed at iteration {k}")))?;
    let sparse = update(&gap)?;
    let residual = sparse.sub(&gap)?;
    let (l2, r2) = scaled_grad_step(l, r, &residual, eta, y.p()).map_err(|e| e.at_iteration(k))?;
    if l2.as_slice().iter().chain(r2.as_slice()).any(|v| !v.is_finite()) {
        return Err(LrmcError::NumericalFailure(format!("iterate diverged at iteration {k}")));
    }
    Ok(SolverState {
        factors: FactorPair::new(l2, r2)?,
        sparse: SparseEstimate::new(sparse),
        k,
    })
}

/// One LRMC iteration with threshold `zeta` and step size `eta`.
pub fn lrmc_step(state: &SolverState, y: &ObservedMatrix, zeta: f64, eta: f64) -> Result<SolverState> {
    step_with(state, y, eta, |gap| soft_threshold(gap, zeta))
}

/// One ScaledGD iteration with top-fraction sparsification.
pub fn scaledgd_step(state: &SolverState, y: &ObservedMatrix, alpha_tilde: f64, eta: f64) -> Result<SolverState> {
    step_with(state, y, eta, |gap| sparsify_top_fraction(gap, alpha_tilde))
}

/// `½ p⁻¹ ‖Π_Ω(L Rᵀ + S − Y)‖²_F`.
pub fn loss(state: &SolverState, y: &ObservedMatrix) -> Result<f64> {
    let res = masked_residual(&state.factors.l, &state.factors.r, state.sparse.as_masked(), y.data())?;
    Ok(0.5 / y.p() * fro_norm(&res).powi(2))
}

/// Ground-truth thresholds `ζ₀ = ‖X⋆‖_∞`, `ζ_k = ‖X_{k−1} − X⋆‖_∞` with a
/// constant step size.
#[derive(Debug, Clone, Copy)]
pub struct OracleSchedule<'a> {
    truth: &'a GroundTruth,
    eta: f64,
}

pub fn oracle_schedule(truth: Option<&GroundTruth>, eta: f64) -> Result<OracleSchedule<'_>> {
    let truth = truth.ok_or_else(|| LrmcError::Configuration("oracle schedule requires ground truth".into()))?;
    ParamSchedule::oracle(eta)?;
    Ok(OracleSchedule { truth, eta })
}

impl OracleSchedule<'_> {
    pub fn zeta0(&self) -> f64 {
        crate::matops::inf_norm(self.truth.xstar())
    }

    /// Threshold for the iteration that follows `factors`.
    pub fn zeta_after(&self, factors: &FactorPair) -> f64 {
        truth_errors(factors, self.truth).1
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// `(‖X − X⋆‖_F, ‖X − X⋆‖_∞)` over every entry.
pub(crate) fn truth_errors(factors: &FactorPair, truth: &GroundTruth) -> (f64, f64) {
    let xs = truth.xstar();
    let (n1, n2) = xs.shape();
    let mut sq = 0.0;
    let mut inf: f64 = 0.0;
    for i in 0..n1 {
        let li = factors.l.row(i);
        let xrow = xs.row(i);
        for j in 0..n2 {
            let d = crate::matops::dot(li, factors.r.row(j)) - xrow[j];
            sq += d * d;
            inf = inf.max(d.abs());
        }
    }
    (sq.sqrt(), inf)
}

/// `‖L'R'ᵀ − LRᵀ‖_F` from `r × r` products, via
/// `L'R'ᵀ − LRᵀ = ΔL R'ᵀ + L ΔRᵀ`, which avoids cancellation.
pub(crate) fn factor_change(prev: &FactorPair, next: &FactorPair) -> f64 {
    let dl = next.l.sub(&prev.l).expect("same shape");
    let dr = next.r.sub(&prev.r).expect("same shape");
    let trace_prod = |a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>| a.component_mul(b).sum();
    let g_dl = gram(&dl);
    let g_rn = gram(&next.r);
    let g_l = gram(&prev.l);
    let g_dr = gram(&dr);
    // tr(ΔLᵀL · ΔRᵀR') = Σ (ΔLᵀL)_{ab} (R'ᵀΔR)_{ab}
    let c1 = dl.t_matmul(&prev.l).expect("shape").to_nalgebra();
    let c2 = next.r.t_matmul(&dr).expect("shape").to_nalgebra();
    let sq = trace_prod(&g_dl, &g_rn) + 2.0 * trace_prod(&c1, &c2) + trace_prod(&g_l, &g_dr);
    sq.max(0.0).sqrt()
}

/// `‖L Rᵀ‖_F` from the grams.
pub(crate) fn factor_norm(f: &FactorPair) -> f64 {
    gram(&f.l).component_mul(&gram(&f.r)).sum().max(0.0).sqrt()
}

enum Method<'a> {
    Scheduled(&'a ParamSchedule),
    Oracle(OracleSchedule<'a>),
    ScaledGd { alpha_tilde: f64, eta: f64 },
}

/// Runs LRMC with `schedule` until `stop`.
pub fn solve(
    y: &ObservedMatrix,
    r: usize,
    schedule: &ParamSchedule,
    stop: StopRule,
    truth: Option<&GroundTruth>,
) -> Result<SolveOutput> {
    solve_with(y, r, schedule, stop, truth, &SolveOptions::default(), &mut |_| {})
}

/// [`solve`] with explicit options and a per-iteration observer.
pub fn solve_with(
    y: &ObservedMatrix,
    r: usize,
    schedule: &ParamSchedule,
    stop: StopRule,
    truth: Option<&GroundTruth>,
    opts: &SolveOptions,
    observer: &mut dyn FnMut(&StepEvent<'_>),
) -> Result<SolveOutput> {
    schedule.validate()?;
    let method = match schedule {
        ParamSchedule::Oracle { eta } => Method::Oracle(oracle_schedule(truth, *eta)?),
        other => Method::Scheduled(other),
    };
    drive(y, r, method, stop, truth, opts, observer)
}

/// The ScaledGD baseline: top-fraction sparsification with a fixed step.
pub fn scaledgd_solve(
    y: &ObservedMatrix,
    r: usize,
    alpha_tilde: f64,
    eta: f64,
    stop: StopRule,
    truth: Option<&GroundTruth>,
    opts: &SolveOptions,
    observer: &mut dyn FnMut(&StepEvent<'_>),
) -> Result<SolveOutput> {
    if !(0.0..=1.0).contains(&alpha_tilde) {
        return Err(LrmcError::param("alpha_tilde", format!("must lie in [0, 1], got {alpha_tilde}")));
    }
    drive(y, r, Method::ScaledGd { alpha_tilde, eta }, stop, truth, opts, observer)
}

fn drive(
    y: &ObservedMatrix,
    r: usize,
    method: Method<'_>,
    stop: StopRule,
    truth: Option<&GroundTruth>,
    opts: &SolveOptions,
    observer: &mut dyn FnMut(&StepEvent<'_>),
) -> Result<SolveOutput> {
    stop.validate()?;
    if stop.needs_truth() && truth.is_none() {
        return Err(LrmcError::Configuration(
            "a ground-truth stop rule requires ground truth".into(),
        ));
    }
    if let Some(t) = truth {
        if t.xstar().shape() != y.shape() {
            return Err(LrmcError::InvalidShape(format!(
                "ground truth {:?} vs observations {:?}",
                t.xstar().shape(),
                y.shape()
            )));
        }
    }
    let metrics_truth = truth.filter(|_| opts.truth_metrics || stop.needs_truth());
    let xstar_norm = truth.map(|t| fro_norm(t.xstar()));

    let clock = Instant::now();
    let (zeta0, s0) = match &method {
        Method::Scheduled(s) => {
            let z = s.zeta0(truth)?;
            (Some(z), soft_threshold(y.data(), z)?)
        }
        Method::Oracle(o) => {
            let z = o.zeta0();
            (Some(z), soft_threshold(y.data(), z)?)
        }
        Method::ScaledGd { alpha_tilde, .. } => (None, sparsify_top_fraction(y.data(), *alpha_tilde)?),
    };
    let mut state = initialize_with(y, r, s0, &opts.svd)?;
    let init_ms = clock.elapsed().as_secs_f64() * 1e3;

    let mut trace = SolveTrace::default();
    let mut last_inf = None;
    let measure = |state: &SolverState, last_inf: &mut Option<f64>| -> (Option<f64>, Option<bool>) {
        match metrics_truth {
            Some(t) => {
                let (fro, inf) = truth_errors(&state.factors, t);
                *last_inf = Some(inf);
                (
                    Some(fro / xstar_norm.expect("truth present")),
                    Some(state.sparse.support_within(&t.sstar)),
                )
            }
            None => (None, None),
        }
    };

    let (rel0, inc0) = measure(&state, &mut last_inf);
    trace.records.push(TraceRecord {
        k: 0,
        rel_err: rel0,
        succ_change: None,
        supp_size: state.sparse.nnz(),
        supp_included: inc0,
        zeta: zeta0,
        eta: None,
        ms: init_ms,
    });
    let truth_tol = match stop.kind {
        StopKind::TruthRelative(tol) => Some(tol),
        _ => None,
    };
    if let (Some(tol), Some(rel)) = (truth_tol, rel0) {
        if rel < tol {
            return Ok(SolveOutput {
                factors: state.factors,
                sparse: state.sparse,
                trace,
                converged: true,
            });
        }
    }

    let budget = stop.budget();
    let mut converged = false;
    for k in 1..=budget {
        let (zeta, eta) = match &method {
            Method::Scheduled(s) => {
                let (z, e) = s.param_at(k)?;
                (Some(z), e)
            }
            Method::Oracle(o) => {
                let z = match last_inf.take() {
                    Some(inf) => inf,
                    None => o.zeta_after(&state.factors),
                };
                (Some(z), o.eta())
            }
            Method::ScaledGd { eta, .. } => (None, *eta),
        };

        let clock = Instant::now();
        let next = match &method {
            Method::ScaledGd { alpha_tilde, .. } => scaledgd_step(&state, y, *alpha_tilde, eta)?,
            _ => lrmc_step(&state, y, zeta.expect("threshold"), eta)?,
        };
        let ms = clock.elapsed().as_secs_f64() * 1e3;

        let (rel_err, supp_included) = measure(&next, &mut last_inf);
        let prev_norm = factor_norm(&state.factors);
        let succ = if prev_norm > 0.0 {
            factor_change(&state.factors, &next.factors) / prev_norm
        } else {
            f64::INFINITY
        };
        observer(&StepEvent {
            k,
            prev: &state,
            next: &next,
            zeta,
            eta,
        });
        trace.records.push(TraceRecord {
            k,
            rel_err,
            succ_change: Some(succ),
            supp_size: next.sparse.nnz(),
            supp_included,
            zeta,
            eta: Some(eta),
            ms,
        });
        state = next;

        let done = match stop.kind {
            StopKind::FixedIterations(_) => false,
            StopKind::TruthRelative(tol) => rel_err.is_some_and(|e| e < tol),
            StopKind::SuccessiveRelative(tol) => succ < tol,
        };
        if done {
            converged = true;
            break;
        }
    }
    if let StopKind::FixedIterations(kk) = stop.kind {
        converged = state.k == kk;
    }
    Ok(SolveOutput {
        factors: state.factors,
        sparse: state.sparse,
        trace,
        converged,
    })
}
