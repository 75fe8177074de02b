use crate::error::{LrmcError, Result};
use crate::matops::{dense_svd, DenseMatrix};

/// Spectral diagnostics of a factored low-rank matrix `L Rᵀ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incoherence {
    pub mu: f64,
    pub kappa: f64,
    pub sigma_1: f64,
    pub sigma_r: f64,
}

/// Incoherence `μ`, condition number `κ` and `σ_r` of `L Rᵀ`, computed from
/// thin QR factors of `L` and `R` and the SVD of the `r × r` core.
pub fn incoherence(l: &DenseMatrix, r: &DenseMatrix) -> Result<Incoherence> {
    let rank = l.cols();
    if rank != r.cols() || rank == 0 || rank > l.rows() || rank > r.rows() {
        return Err(LrmcError::InvalidShape(format!(
            "factors {:?} and {:?} do not form a rank-r product",
            l.shape(),
            r.shape()
        )));
    }
    let ql = l.to_nalgebra().qr();
    let qr = r.to_nalgebra().qr();
    let core = ql.r() * qr.r().transpose();
    let svd = dense_svd(&core, rank, 10_000)?;
    let sigma_1 = svd.sigma[0];
    let sigma_r = svd.sigma[rank - 1];
    if !(sigma_r > sigma_1 * 1e-13) {
        return Err(LrmcError::InvalidRank(format!(
            "product is rank deficient: sigma_r = {sigma_r:e}, sigma_1 = {sigma_1:e}"
        )));
    }
    let u = DenseMatrix::from_nalgebra(&ql.q()).matmul(&svd.u)?;
    let v = DenseMatrix::from_nalgebra(&qr.q()).matmul(&svd.v)?;
    let max_row_sq = |m: &DenseMatrix| {
        (0..m.rows())
            .map(|i| m.row(i).iter().map(|x| x * x).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let mu = (l.rows() as f64 * max_row_sq(&u)).max(r.rows() as f64 * max_row_sq(&v)) / rank as f64;
    Ok(Incoherence {
        mu,
        kappa: sigma_1 / sigma_r,
        sigma_1,
        sigma_r,
    })
}
