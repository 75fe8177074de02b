//! Run a small benchmark suite and print its CSV.
//!
//! `cargo run --release --example bench_suite -- iters-vs-p`

use lrmc::bench::{run_suite, BenchConfig, Suite};

fn main() -> lrmc::Result<()> {
    let suite: Suite = std::env::args().nth(1).as_deref().unwrap_or("conv-alpha").parse()?;
    let cfg = BenchConfig {
        n: 120,
        rank: 3,
        trials: 2,
        ps: vec![0.3, 0.6, 1.0],
        max_iters: 150,
        trace_iters: 30,
        timed_iters: 10,
        ..BenchConfig::default()
    };
    print!("{}", run_suite(suite, &cfg)?);
    Ok(())
}
