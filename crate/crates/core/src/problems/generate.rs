use std::sync::Arc;

use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{GroundTruth, ObservedMatrix, SyntheticInstance};
use crate::error::{LrmcError, Result};
use crate::matops::{DenseMatrix, IndexSet, MaskedMatrix};
use crate::solver::SparseEstimate;

/// Independent ChaCha streams, one per generated artifact, so that changing
/// e.g. `α` leaves the factors and `Ω` untouched.
pub mod stream {
    pub const FACTORS: u64 = 1;
    pub const MASK: u64 = 2;
    pub const SUPPORT: u64 = 3;
    pub const MAGNITUDES: u64 = 4;
}

pub(crate) fn rng_for(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

fn check_rate(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(LrmcError::param("p", format!("must lie in (0, 1], got {p}")));
    }
    Ok(())
}

/// Bernoulli(`p`) sample of positions of an `n1 × n2` matrix.
pub fn bernoulli_mask(n1: usize, n2: usize, p: f64, seed: u64) -> Result<IndexSet> {
    check_rate(p)?;
    if n1 == 0 || n2 == 0 || p == 1.0 {
        return IndexSet::full(n1, n2);
    }
    let mut rng = rng_for(seed, stream::MASK);
    let mut entries = Vec::with_capacity((p * (n1 * n2) as f64 * 1.05) as usize + 16);
    for i in 0..n1 as u32 {
        for j in 0..n2 as u32 {
            if rng.random::<f64>() < p {
                entries.push((i, j));
            }
        }
    }
    Ok(IndexSet::from_sorted(n1, n2, entries))
}

/// Parameters of one synthetic instance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n1: usize,
    pub n2: usize,
    pub rank: usize,
    pub p: f64,
    pub alpha: f64,
}

impl SyntheticSpec {
    pub fn square(n: usize, rank: usize, p: f64, alpha: f64) -> Self {
        SyntheticSpec {
            n1: n,
            n2: n,
            rank,
            p,
            alpha,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<SyntheticInstance> {
        generate_synthetic(self.n1, self.n2, self.rank, self.p, self.alpha, seed)
    }
}

/// Gaussian factors, Bernoulli observations and `⌊α|Ω|⌋` uniform outliers
/// with magnitudes in `[−m̄, m̄]`, `m̄` the mean absolute entry of `X⋆`.
pub fn generate_synthetic(
    n1: usize,
    n2: usize,
    r: usize,
    p: f64,
    alpha: f64,
    seed: u64,
) -> Result<SyntheticInstance> {
    check_rate(p)?;
    if !(0.0..1.0).contains(&alpha) {
        return Err(LrmcError::param("alpha", format!("must lie in [0, 1), got {alpha}")));
    }
    if n1 == 0 || n2 == 0 {
        return Err(LrmcError::param("n1/n2", "dimensions must be positive"));
    }
    if r == 0 || r > n1.min(n2) {
        return Err(LrmcError::param(
            "rank",
            format!("must lie in [1, {}], got {r}", n1.min(n2)),
        ));
    }

    let mut factor_rng = rng_for(seed, stream::FACTORS);
    let lstar = DenseMatrix::from_fn(n1, r, |_, _| StandardNormal.sample(&mut factor_rng));
    let rstar = DenseMatrix::from_fn(n2, r, |_, _| StandardNormal.sample(&mut factor_rng));
    let xstar = lstar.matmul_t(&rstar)?;
    let mean_abs = xstar.as_slice().iter().map(|v| v.abs()).sum::<f64>() / (n1 * n2) as f64;

    let omega = Arc::new(bernoulli_mask(n1, n2, p, seed)?);
    let n_outliers = (alpha * omega.len() as f64).floor() as usize;
    let mut picks = rand::seq::index::sample(&mut rng_for(seed, stream::SUPPORT), omega.len(), n_outliers)
        .into_vec();
    picks.sort_unstable();

    let mut outliers = vec![0.0; omega.len()];
    if n_outliers > 0 {
        let dist = Uniform::new_inclusive(-mean_abs, mean_abs)
            .map_err(|e| LrmcError::NumericalFailure(format!("outlier magnitude range: {e}")))?;
        let mut mag_rng = rng_for(seed, stream::MAGNITUDES);
        for idx in picks {
            outliers[idx] = dist.sample(&mut mag_rng);
        }
    }

    let y_values = omega
        .iter()
        .zip(&outliers)
        .map(|((i, j), s)| xstar.get(i, j) + s)
        .collect();
    let observed = ObservedMatrix::new(MaskedMatrix::new(omega.clone(), y_values)?);
    let sstar = SparseEstimate::new(MaskedMatrix::new(omega, outliers)?);
    let truth = GroundTruth::new(lstar, rstar, sstar, alpha)?;
    Ok(SyntheticInstance {
        observed,
        truth,
        seed,
    })
}

/// Observes a fully known matrix on a Bernoulli(`p`) mask.
pub fn subsample(m: &DenseMatrix, p: f64, seed: u64) -> Result<ObservedMatrix> {
    let (n1, n2) = m.shape();
    let omega = Arc::new(bernoulli_mask(n1, n2, p, seed)?);
    Ok(ObservedMatrix::new(MaskedMatrix::project(m, omega)?))
}
