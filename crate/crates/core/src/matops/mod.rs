//! Dense and masked matrix kernels shared by every solver.

mod dense;
mod kernels;
mod masked;
mod norms;
mod svd;
mod threshold;

pub use dense::DenseMatrix;
pub(crate) use dense::dot;
pub use kernels::{masked_residual, scaled_grad_step, MAX_GRAM_CONDITION};
pub(crate) use kernels::gram;
pub use masked::{IndexSet, MaskedMatrix};
pub use norms::{fro_norm, inf_norm, spectral_norm_est, spectral_norm_with, PowerIterConfig};
pub use svd::{truncated_svd, LinearOperator, SvdConfig, SvdTriple};
pub(crate) use svd::dense_svd;
pub use threshold::{
    ceil_count, shrink, soft_threshold, sparsify_top_fraction, sparsify_top_fraction_dense,
    MatrixValues,
};
