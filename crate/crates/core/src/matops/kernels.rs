use nalgebra::{Cholesky, DMatrix};

use super::dense::DenseMatrix;
use super::masked::MaskedMatrix;
use crate::error::{FactorSide, LrmcError, Result};

/// Gram matrices with a condition estimate above this are rejected.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// `Π_Ω(L Rᵀ + S − Y)`, evaluated entrywise over `Ω` only.
///
/// `s` and `y` must share the index set `Ω`.
pub fn masked_residual(
    l: &DenseMatrix,
    r: &DenseMatrix,
    s: &MaskedMatrix,
    y: &MaskedMatrix,
) -> Result<MaskedMatrix> {
    if !s.same_support(y) {
        return Err(LrmcError::InvalidShape(
            "sparse estimate and observations are not defined over the same Ω".into(),
        ));
    }
    let mut out = MaskedMatrix::from_factors(l, r, y.support().clone())?;
    for ((o, sv), yv) in out.values_mut().iter_mut().zip(s.values()).zip(y.values()) {
        *o += sv - yv;
    }
    Ok(out)
}

/// Simultaneous preconditioned factor update
/// `L' = L − (η/p)·E·R·(RᵀR)⁻¹`, `R' = R − (η/p)·Eᵀ·L·(LᵀL)⁻¹`,
/// where both grams use the pre-update factors.
pub fn scaled_grad_step(
    l: &DenseMatrix,
    r: &DenseMatrix,
    residual: &MaskedMatrix,
    eta: f64,
    p: f64,
) -> Result<(DenseMatrix, DenseMatrix)> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(LrmcError::param("eta", format!("must be finite and > 0, got {eta}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(LrmcError::param("p", format!("must lie in (0, 1], got {p}")));
    }
    if l.cols() != r.cols() || residual.shape() != (l.rows(), r.rows()) {
        return Err(LrmcError::InvalidShape(format!(
            "factors {:?}, {:?} vs residual {:?}",
            l.shape(),
            r.shape(),
            residual.shape()
        )));
    }
    let gram_r = gram(r);
    let gram_l = gram(l);
    let grad_l = residual.mul_dense(r)?;
    let grad_r = residual.t_mul_dense(l)?;
    let dir_l = solve_gram(&grad_l, gram_r, FactorSide::Right)?;
    let dir_r = solve_gram(&grad_r, gram_l, FactorSide::Left)?;
    let step = eta / p;
    Ok((axpy(l, -step, &dir_l), axpy(r, -step, &dir_r)))
}

fn axpy(x: &DenseMatrix, a: f64, d: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    for (o, dv) in out.as_mut_slice().iter_mut().zip(d.as_slice()) {
        *o += a * dv;
    }
    out
}

/// `FᵀF` as an `r × r` matrix.
pub(crate) fn gram(f: &DenseMatrix) -> DMatrix<f64> {
    let k = f.cols();
    let mut g = DMatrix::zeros(k, k);
    for i in 0..f.rows() {
        let row = f.row(i);
        for a in 0..k {
            for b in a..k {
                g[(a, b)] += row[a] * row[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            g[(a, b)] = g[(b, a)];
        }
    }
    g
}

/// Condition number of a symmetric positive semidefinite matrix.
pub(crate) fn spd_condition(g: &DMatrix<f64>) -> f64 {
    let eig = g.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    let min = eig.iter().fold(f64::INFINITY, |a, b| a.min(*b));
    if !(min > 0.0) || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Rows of `G · gram⁻¹` via a Cholesky solve.
fn solve_gram(g: &DenseMatrix, gram: DMatrix<f64>, side: FactorSide) -> Result<DenseMatrix> {
    let condition = spd_condition(&gram);
    if condition > MAX_GRAM_CONDITION {
        return Err(LrmcError::SingularFactor {
            side,
            condition,
            iteration: None,
        });
    }
    let chol = Cholesky::new(gram).ok_or(LrmcError::SingularFactor {
        side,
        condition,
        iteration: None,
    })?;
    // Row-major G (n × r) is column-major Gᵀ (r × n); solving gram·Xᵀ = Gᵀ
    // leaves Xᵀ column-major, i.e. X row-major.
    let gt = DMatrix::from_column_slice(g.cols(), g.rows(), g.as_slice());
    let xt = chol.solve(&gt);
    DenseMatrix::from_row_major(g.rows(), g.cols(), xt.as_slice().to_vec())
        .map_err(|_| LrmcError::NumericalFailure("gram solve produced non-finite values".into()))
}
