//! Truncated SVD: exact dense decomposition for small inputs, seeded
//! randomized subspace iteration otherwise.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dense::DenseMatrix;
use super::masked::MaskedMatrix;
use crate::error::{LrmcError, Result};

/// Anything that can be multiplied against dense blocks from both sides.
pub trait LinearOperator {
    fn op_shape(&self) -> (usize, usize);
    /// `A · X`
    fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix>;
    /// `Aᵀ · X`
    fn apply_t(&self, x: &DenseMatrix) -> Result<DenseMatrix>;
    fn to_dense_matrix(&self) -> DenseMatrix;
}

impl LinearOperator for DenseMatrix {
    fn op_shape(&self) -> (usize, usize) {
        self.shape()
    }
    fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.matmul(x)
    }
    fn apply_t(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.t_matmul(x)
    }
    fn to_dense_matrix(&self) -> DenseMatrix {
        self.clone()
    }
}

impl LinearOperator for MaskedMatrix {
    fn op_shape(&self) -> (usize, usize) {
        self.shape()
    }
    fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.mul_dense(x)
    }
    fn apply_t(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.t_mul_dense(x)
    }
    fn to_dense_matrix(&self) -> DenseMatrix {
        self.to_dense()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdConfig {
    /// Extra sketch columns beyond the target rank.
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
    /// Inputs with `min(n₁, n₂)` at or below this use the exact decomposition.
    pub dense_cutoff: usize,
    /// Iteration cap handed to the dense bidiagonal SVD.
    pub max_iterations: usize,
}

impl Default for SvdConfig {
    fn default() -> Self {
        SvdConfig {
            oversample: 8,
            power_iters: 8,
            seed: 0x5eed_5eed,
            dense_cutoff: 400,
            max_iterations: 100_000,
        }
    }
}

/// Leading singular triplets `U Σ Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdTriple {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdTriple {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let us = DenseMatrix::from_fn(self.u.rows(), self.rank(), |i, j| {
            self.u.get(i, j) * self.sigma[j]
        });
        us.matmul_t(&self.v).expect("consistent triple")
    }
}

/// Best rank-`r` approximation of `m`.
pub fn truncated_svd<A: LinearOperator + ?Sized>(m: &A, r: usize, cfg: &SvdConfig) -> Result<SvdTriple> {
    let (n1, n2) = m.op_shape();
    let min_dim = n1.min(n2);
    if r == 0 || r > min_dim {
        return Err(LrmcError::InvalidRank(format!(
            "rank {r} requested from a {n1}x{n2} matrix"
        )));
    }
    if min_dim <= cfg.dense_cutoff {
        dense_svd(&m.to_dense_matrix().to_nalgebra(), r, cfg.max_iterations)
    } else {
        randomized_svd(m, r, cfg)
    }
}

/// Exact decomposition truncated to `r`, singular values sorted descending.
pub(crate) fn dense_svd(m: &DMatrix<f64>, r: usize, max_iterations: usize) -> Result<SvdTriple> {
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON, max_iterations)
        .ok_or_else(|| {
            LrmcError::NumericalFailure(format!(
                "dense SVD did not converge within {max_iterations} iterations"
            ))
        })?;
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, b| svd.singular_values[*b].total_cmp(&svd.singular_values[*a]));
    order.truncate(r);

    let sigma = order.iter().map(|&k| svd.singular_values[k]).collect();
    let u_out = DenseMatrix::from_fn(m.nrows(), r, |i, j| u[(i, order[j])]);
    let v_out = DenseMatrix::from_fn(m.ncols(), r, |i, j| v_t[(order[j], i)]);
    Ok(SvdTriple {
        u: u_out,
        sigma,
        v: v_out,
    })
}

fn orthonormalize(m: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_nalgebra(&m.to_nalgebra().qr().q())
}

fn randomized_svd<A: LinearOperator + ?Sized>(m: &A, r: usize, cfg: &SvdConfig) -> Result<SvdTriple> {
    let (n1, n2) = m.op_shape();
    let width = (r + cfg.oversample).min(n1.min(n2));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sketch = DenseMatrix::from_fn(n2, width, |_, _| StandardNormal.sample(&mut rng));

    let mut q = orthonormalize(&m.apply(&sketch)?);
    for _ in 0..cfg.power_iters {
        let z = orthonormalize(&m.apply_t(&q)?);
        q = orthonormalize(&m.apply(&z)?);
    }
    // Bᵀ = Aᵀ Q is n₂ × width; its SVD gives A ≈ (Q V_b) Σ U_bᵀ.
    let bt = m.apply_t(&q)?;
    let small = dense_svd(&bt.to_nalgebra(), r, cfg.max_iterations)?;
    let u = q.matmul(&small.v)?;
    if small.sigma.iter().any(|s| !s.is_finite()) {
        return Err(LrmcError::NumericalFailure("randomized SVD produced non-finite values".into()));
    }
    Ok(SvdTriple {
        u,
        sigma: small.sigma,
        v: small.u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::masked::IndexSet;
    use std::sync::Arc;

    #[test]
    fn rank_one_exact() {
        let u = [1.0, -2.0, 2.0];
        let v = [3.0, 4.0];
        let m = DenseMatrix::from_fn(3, 2, |i, j| u[i] * v[j]);
        let svd = truncated_svd(&m, 1, &SvdConfig::default()).unwrap();
        assert!((svd.sigma[0] - 15.0).abs() < 1e-12);
        let err = svd.reconstruct().sub(&m).unwrap();
        assert!(err.as_slice().iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn identity_spectrum() {
        let svd = truncated_svd(&DenseMatrix::identity(3), 2, &SvdConfig::default()).unwrap();
        assert!((svd.sigma[0] - 1.0).abs() < 1e-14 && (svd.sigma[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn invalid_rank() {
        let m = DenseMatrix::identity(3);
        assert!(matches!(
            truncated_svd(&m, 4, &SvdConfig::default()),
            Err(LrmcError::InvalidRank(_))
        ));
        assert!(truncated_svd(&m, 0, &SvdConfig::default()).is_err());
    }

    #[test]
    fn randomized_path_recovers_exact_low_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = DenseMatrix::from_fn(60, 3, |_, _| StandardNormal.sample(&mut rng));
        let r = DenseMatrix::from_fn(50, 3, |_, _| StandardNormal.sample(&mut rng));
        let x = l.matmul_t(&r).unwrap();
        let masked = MaskedMatrix::project(&x, Arc::new(IndexSet::full(60, 50).unwrap())).unwrap();
        let cfg = SvdConfig {
            dense_cutoff: 10,
            ..SvdConfig::default()
        };
        let svd = truncated_svd(&masked, 3, &cfg).unwrap();
        let exact = truncated_svd(&x, 3, &SvdConfig::default()).unwrap();
        for (a, b) in svd.sigma.iter().zip(&exact.sigma) {
            assert!((a - b).abs() <= 1e-10 * b);
        }
        let err = svd.reconstruct().sub(&x).unwrap();
        let rel = crate::matops::fro_norm(&err) / crate::matops::fro_norm(&x);
        assert!(rel < 1e-10, "{rel}");
    }
}
