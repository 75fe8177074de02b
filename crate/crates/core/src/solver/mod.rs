//! Robust completion solvers: soft-thresholded scaled gradient descent
//! (LRMC) and the top-fraction ScaledGD baseline.

mod driver;
mod trace;

use std::sync::Arc;

use crate::error::{LrmcError, Result};
use crate::matops::{dot, DenseMatrix, IndexSet, MaskedMatrix};

pub use driver::{
    initialize, initialize_with, loss, lrmc_step, oracle_schedule, scaledgd_solve, scaledgd_step, solve,
    solve_with, OracleSchedule, SolveOptions, SolveOutput, StepEvent,
};
pub use trace::{SolveTrace, TraceRecord, TRACE_HEADER};

/// Low-rank iterate `X = L Rᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub l: DenseMatrix,
    pub r: DenseMatrix,
}

impl FactorPair {
    pub fn new(l: DenseMatrix, r: DenseMatrix) -> Result<Self> {
        if l.cols() != r.cols() {
            return Err(LrmcError::InvalidShape(format!(
                "factor ranks differ: {} vs {}",
                l.cols(),
                r.cols()
            )));
        }
        Ok(FactorPair { l, r })
    }

    pub fn rank(&self) -> usize {
        self.l.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.l.rows(), self.r.rows())
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        dot(self.l.row(i), self.r.row(j))
    }

    /// Dense `L Rᵀ`.
    pub fn product(&self) -> DenseMatrix {
        self.l.matmul_t(&self.r).expect("consistent factor ranks")
    }
}

/// Outlier estimate `S`, stored over the observation set `Ω` with explicit
/// zeros; its support is the set of nonzero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseEstimate {
    values: MaskedMatrix,
}

impl SparseEstimate {
    pub fn new(values: MaskedMatrix) -> Self {
        SparseEstimate { values }
    }

    pub fn zeros(omega: Arc<IndexSet>) -> Self {
        SparseEstimate {
            values: MaskedMatrix::zeros(omega),
        }
    }

    #[inline]
    pub fn as_masked(&self) -> &MaskedMatrix {
        &self.values
    }

    pub fn into_masked(self) -> MaskedMatrix {
        self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    /// Nonzero positions.
    pub fn support(&self) -> IndexSet {
        self.values.nonzero_support()
    }

    pub fn nnz(&self) -> usize {
        self.values.nnz()
    }

    /// Whether every nonzero of `self` is also a nonzero of `other`.
    pub fn support_within(&self, other: &SparseEstimate) -> bool {
        let mine = &self.values;
        let theirs = &other.values;
        if mine.same_support(theirs) {
            mine.values()
                .iter()
                .zip(theirs.values())
                .all(|(a, b)| *a == 0.0 || *b != 0.0)
        } else {
            mine.support()
                .iter()
                .zip(mine.values())
                .all(|((i, j), v)| *v == 0.0 || theirs.get(i, j) != 0.0)
        }
    }

    /// `‖self − other‖_∞` over the union of both supports.
    pub fn inf_distance(&self, other: &SparseEstimate) -> f64 {
        let a = &self.values;
        let b = &other.values;
        if a.same_support(b) {
            return a
                .values()
                .iter()
                .zip(b.values())
                .fold(0.0, |m, (x, y)| m.max((x - y).abs()));
        }
        let mut m: f64 = 0.0;
        for ((i, j), v) in a.support().iter().zip(a.values()) {
            m = m.max((v - b.get(i, j)).abs());
        }
        for ((i, j), v) in b.support().iter().zip(b.values()) {
            m = m.max((a.get(i, j) - v).abs());
        }
        m
    }
}

/// Iterate `(L_k, R_k, S_k)`.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub factors: FactorPair,
    pub sparse: SparseEstimate,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopKind {
    /// Run exactly `K` iterations (capped by `max_iters`).
    FixedIterations(usize),
    /// `‖X_k − X⋆‖_F / ‖X⋆‖_F < tol`; needs ground truth.
    TruthRelative(f64),
    /// `‖X_k − X_{k−1}‖_F / ‖X_{k−1}‖_F < tol`.
    SuccessiveRelative(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub kind: StopKind,
    pub max_iters: usize,
}

pub const DEFAULT_MAX_ITERS: usize = 500;

impl StopRule {
    pub fn iterations(k: usize) -> Self {
        StopRule {
            kind: StopKind::FixedIterations(k),
            max_iters: k.max(DEFAULT_MAX_ITERS),
        }
    }

    pub fn truth_relative(tol: f64) -> Self {
        StopRule {
            kind: StopKind::TruthRelative(tol),
            max_iters: DEFAULT_MAX_ITERS,
        }
    }

    pub fn successive(tol: f64) -> Self {
        StopRule {
            kind: StopKind::SuccessiveRelative(tol),
            max_iters: DEFAULT_MAX_ITERS,
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn needs_truth(&self) -> bool {
        matches!(self.kind, StopKind::TruthRelative(_))
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            StopKind::TruthRelative(tol) | StopKind::SuccessiveRelative(tol) if !(tol > 0.0 && tol.is_finite()) => {
                Err(LrmcError::param("tol", format!("must be finite and > 0, got {tol}")))
            }
            _ => Ok(()),
        }
    }

    /// Iteration budget after which the loop ends regardless of tolerance.
    pub fn budget(&self) -> usize {
        match self.kind {
            StopKind::FixedIterations(k) => k.min(self.max_iters),
            _ => self.max_iters,
        }
    }
}
