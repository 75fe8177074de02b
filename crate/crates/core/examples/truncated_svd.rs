//! Rank-r SVD of a dense and a masked operator, exact and randomized paths.

use std::sync::Arc;

use lrmc::matops::{fro_norm, truncated_svd, DenseMatrix, IndexSet, MaskedMatrix, SvdConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> lrmc::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, r) = (600, 4);
    let a = DenseMatrix::from_fn(n, r, |_, _| rng.random_range(-1.0..1.0));
    let b = DenseMatrix::from_fn(n, r, |_, _| rng.random_range(-1.0..1.0));
    let x = a.matmul_t(&b)?;

    let exact = SvdConfig { dense_cutoff: usize::MAX, ..SvdConfig::default() };
    let sketch = SvdConfig { dense_cutoff: 0, ..SvdConfig::default() };
    for (name, cfg) in [("dense", exact), ("randomized", sketch)] {
        let t = std::time::Instant::now();
        let svd = truncated_svd(&x, r, &cfg)?;
        let err = fro_norm(&svd.reconstruct().sub(&x)?) / fro_norm(&x);
        println!("{name:>10}: sigma = {:.3?}, rel err {err:.2e}, {:?}", svd.sigma, t.elapsed());
    }

    // p⁻¹ Π_Ω X has the same leading subspace in expectation
    let p = 0.3;
    let omega = Arc::new(IndexSet::new(
        n,
        n,
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|_| rng.random::<f64>() < p),
    )?);
    let masked = MaskedMatrix::project(&x, omega)?.scaled(1.0 / p);
    let svd = truncated_svd(&masked, r, &SvdConfig::default())?;
    println!("masked, p = {p}: sigma = {:.3?}", svd.sigma);
    Ok(())
}
