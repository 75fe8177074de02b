//! Soft-thresholding and top-fraction sparsification on a small observed matrix.

use std::sync::Arc;

use lrmc::matops::{ceil_count, shrink, soft_threshold, sparsify_top_fraction, IndexSet, MaskedMatrix};

fn main() -> lrmc::Result<()> {
    for x in [-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0] {
        println!("shrink({x:+.1}, 1) = {:+.1}", shrink(x, 1.0));
    }

    let omega = Arc::new(IndexSet::new(3, 4, [(0, 0), (0, 3), (1, 1), (1, 2), (2, 0), (2, 3)])?);
    let m = MaskedMatrix::new(omega, vec![5.0, -0.2, 0.7, -4.0, 1.5, 0.1])?;
    let st = soft_threshold(&m, 1.0)?;
    println!("\nsoft threshold at 1: {:?}", st.values());

    // each entry must rank in the top ⌈α̃·n₂⌉ of its row and ⌈α̃·n₁⌉ of its column
    let (n1, n2) = m.shape();
    let top = sparsify_top_fraction(&m, 0.25)?;
    println!(
        "top 25% (per row {}, per column {}): {:?}",
        ceil_count(0.25, n2),
        ceil_count(0.25, n1),
        top.values()
    );
    Ok(())
}
