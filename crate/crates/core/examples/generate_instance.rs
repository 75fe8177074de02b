//! Build a synthetic instance, report its diagnostics and write it to disk.

use lrmc::problems::{generate_synthetic, load_observed};

fn main() -> lrmc::Result<()> {
    let inst = generate_synthetic(200, 150, 5, 0.4, 0.1, 11)?;
    let t = &inst.truth;
    let (rmax, cmax) = t.outlier_row_col_fraction();
    println!("shape {:?}, realized p = {:.4}", inst.observed.shape(), inst.observed.p());
    println!("outliers {} (alpha = {}), max row/col fraction {rmax:.3}/{cmax:.3}", t.sstar.nnz(), t.alpha);
    println!("sigma_1 = {:.3}, sigma_r = {:.3}, kappa = {:.3}, mu = {:.3}", t.sigma_1, t.sigma_r, t.kappa, t.mu);

    let dir = std::env::temp_dir().join("lrmc-generate-example");
    std::fs::create_dir_all(&dir)?;
    lrmc::cli::write_instance(&inst, &dir)?;
    let back = load_observed(dir.join("Y.csv"))?;
    assert_eq!(back.data().values(), inst.observed.data().values());
    println!("wrote and re-read {}", dir.display());
    Ok(())
}
