//! Soft-thresholded LRMC against the top-fraction ScaledGD baseline on the
//! same instances.

use lrmc::bench::{run_method, BenchConfig, Method};
use lrmc::problems::generate_synthetic;
use lrmc::solver::{SolveOptions, StopRule};

fn main() -> lrmc::Result<()> {
    let cfg = BenchConfig { n: 200, ..BenchConfig::default() };
    let stop = StopRule::truth_relative(1e-6).with_max_iters(200);
    for alpha in [0.05, 0.1, 0.2] {
        let inst = generate_synthetic(cfg.n, cfg.n, cfg.rank, 1.0, alpha, 5)?;
        for method in [Method::Lrmc, Method::ScaledGd] {
            match run_method(method, &inst, &cfg, stop, &SolveOptions::default()) {
                Ok(out) => {
                    let last = out.trace.last().unwrap();
                    println!(
                        "alpha {alpha:.2} {:>8}: {:3} iterations, rel err {:.2e}",
                        method.name(),
                        last.k,
                        last.rel_err.unwrap_or(f64::NAN)
                    );
                }
                Err(e) => println!("alpha {alpha:.2} {:>8}: {e}", method.name()),
            }
        }
    }
    Ok(())
}
