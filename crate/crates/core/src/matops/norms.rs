use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dense::DenseMatrix;
use super::svd::LinearOperator;
use super::threshold::MatrixValues;
use crate::error::{LrmcError, Result};

/// Frobenius norm `‖M‖_F`.
pub fn fro_norm<M: MatrixValues>(m: &M) -> f64 {
    m.values().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest entry magnitude `‖M‖_∞`.
pub fn inf_norm<M: MatrixValues>(m: &M) -> f64 {
    m.values().iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

#[derive(Debug, Clone, Copy)]
pub struct PowerIterConfig {
    pub rel_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for PowerIterConfig {
    fn default() -> Self {
        PowerIterConfig {
            rel_tol: 1e-6,
            max_iters: 1000,
            seed: 0x0b5e_55ed,
        }
    }
}

/// Spectral norm `‖M‖₂` by power iteration on `MᵀM`.
pub fn spectral_norm_est<M: MatrixValues + LinearOperator>(m: &M) -> Result<f64> {
    spectral_norm_with(m, &PowerIterConfig::default())
}

/// Power iteration stops once the eigen-residual `‖MᵀM v − λv‖` falls below
/// `rel_tol·λ`, which bounds the relative error of `λ = σ₁²` by `rel_tol`.
pub fn spectral_norm_with<M: MatrixValues + LinearOperator>(m: &M, cfg: &PowerIterConfig) -> Result<f64> {
    if m.values().iter().any(|v| !v.is_finite()) {
        return Err(LrmcError::NumericalFailure("non-finite entry in norm input".into()));
    }
    let n2 = m.op_shape().1;
    if m.values().iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut v = DenseMatrix::from_fn(n2, 1, |_, _| StandardNormal.sample(&mut rng));
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..cfg.max_iters {
        let w = m.apply_t(&m.apply(&v)?)?;
        lambda = dot_col(&v, &w);
        let resid: f64 = w
            .as_slice()
            .iter()
            .zip(v.as_slice())
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm_w = dot_col(&w, &w).sqrt();
        if norm_w == 0.0 {
            return Ok(0.0);
        }
        v = w.scaled(1.0 / norm_w);
        if resid <= cfg.rel_tol * lambda {
            break;
        }
    }
    Ok(lambda.max(0.0).sqrt())
}

fn dot_col(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut DenseMatrix) {
    let n = dot_col(v, v).sqrt();
    if n > 0.0 {
        *v = v.scaled(1.0 / n);
    }
}
