//! Synthetic robust-completion instances, observation masks, matrix files
//! and incoherence diagnostics.

mod generate;
mod incoherence;
mod io;

use std::sync::Arc;

use crate::matops::{DenseMatrix, IndexSet, MaskedMatrix};
use crate::solver::SparseEstimate;

pub use generate::{bernoulli_mask, generate_synthetic, subsample, stream, SyntheticSpec};
pub use incoherence::{incoherence, Incoherence};
pub use io::{
    load_dense, load_observed, load_sparse_csv, save_dense_binary, save_dense_csv,
    save_observed_csv, save_sparse_csv, BINARY_MAGIC,
};

/// Partially observed data `Π_Ω Y` together with its sampling rate.
#[derive(Debug, Clone)]
pub struct ObservedMatrix {
    data: MaskedMatrix,
    p: f64,
}

impl ObservedMatrix {
    /// The sampling rate is always the realized `|Ω| / (n₁n₂)`.
    pub fn new(data: MaskedMatrix) -> Self {
        let (n1, n2) = data.shape();
        let p = data.support().len() as f64 / (n1 as f64 * n2 as f64);
        ObservedMatrix { data, p }
    }

    #[inline]
    pub fn data(&self) -> &MaskedMatrix {
        &self.data
    }

    #[inline]
    pub fn omega(&self) -> &Arc<IndexSet> {
        self.data.support()
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        self.data.shape()
    }

    /// `c·Y` on the same support.
    pub fn scaled(&self, c: f64) -> Self {
        ObservedMatrix {
            data: self.data.scaled(c),
            p: self.p,
        }
    }
}

/// The planted solution `X⋆ = L⋆R⋆ᵀ`, `S⋆` and their diagnostics.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub lstar: DenseMatrix,
    pub rstar: DenseMatrix,
    pub sstar: SparseEstimate,
    /// Fraction of observed entries that carry an outlier.
    pub alpha: f64,
    pub sigma_r: f64,
    pub sigma_1: f64,
    pub kappa: f64,
    pub mu: f64,
    xstar: DenseMatrix,
}

impl GroundTruth {
    pub fn new(lstar: DenseMatrix, rstar: DenseMatrix, sstar: SparseEstimate, alpha: f64) -> crate::Result<Self> {
        let inc = incoherence(&lstar, &rstar)?;
        let xstar = lstar.matmul_t(&rstar)?;
        if sstar.shape() != xstar.shape() {
            return Err(crate::LrmcError::InvalidShape(format!(
                "outlier matrix {:?} vs low-rank {:?}",
                sstar.shape(),
                xstar.shape()
            )));
        }
        Ok(GroundTruth {
            lstar,
            rstar,
            sstar,
            alpha,
            sigma_r: inc.sigma_r,
            sigma_1: inc.sigma_1,
            kappa: inc.kappa,
            mu: inc.mu,
            xstar,
        })
    }

    /// Dense `X⋆`.
    #[inline]
    pub fn xstar(&self) -> &DenseMatrix {
        &self.xstar
    }

    pub fn rank(&self) -> usize {
        self.lstar.cols()
    }

    /// Largest per-row and per-column fraction of outliers, compared with
    /// the per-row/column sparsity model.
    pub fn outlier_row_col_fraction(&self) -> (f64, f64) {
        let (n1, n2) = self.xstar.shape();
        let mut rows = vec![0usize; n1];
        let mut cols = vec![0usize; n2];
        for (i, j) in self.sstar.support().iter() {
            rows[i] += 1;
            cols[j] += 1;
        }
        let rmax = rows.into_iter().max().unwrap_or(0) as f64 / n2 as f64;
        let cmax = cols.into_iter().max().unwrap_or(0) as f64 / n1 as f64;
        (rmax, cmax)
    }

    /// The same truth scaled by `c > 0` (factors by `√c`).
    pub fn scaled(&self, c: f64) -> crate::Result<Self> {
        let s = c.sqrt();
        GroundTruth::new(
            self.lstar.scaled(s),
            self.rstar.scaled(s),
            SparseEstimate::new(self.sstar.as_masked().scaled(c)),
            self.alpha,
        )
    }
}

/// A generated problem and the seed it came from.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub observed: ObservedMatrix,
    pub truth: GroundTruth,
    pub seed: u64,
}
