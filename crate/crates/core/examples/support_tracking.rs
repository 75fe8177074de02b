//! Watch each iteration through the solve observer: the distance of the
//! outlier estimate to the truth and whether its support stays inside the
//! true outlier support.

use lrmc::problems::generate_synthetic;
use lrmc::schedules::ParamSchedule;
use lrmc::solver::{solve_with, SolveOptions, StopRule};

fn main() -> lrmc::Result<()> {
    let inst = generate_synthetic(250, 250, 5, 1.0, 0.1, 9)?;
    let truth = &inst.truth;
    let mut violations = 0;
    let out = solve_with(
        &inst.observed,
        5,
        &ParamSchedule::oracle(0.5)?,
        StopRule::iterations(40),
        Some(truth),
        &SolveOptions::default(),
        &mut |ev| {
            let inside = ev.next.sparse.support_within(&truth.sstar);
            violations += usize::from(!inside);
            if ev.k % 5 == 0 {
                println!(
                    "k = {:2}  zeta = {:.3e}  |supp S| = {:5}  inside = {inside}  ‖S − S⋆‖∞ = {:.3e}",
                    ev.k,
                    ev.zeta.unwrap_or(f64::NAN),
                    ev.next.sparse.nnz(),
                    ev.next.sparse.inf_distance(&truth.sstar)
                );
            }
        },
    )?;
    println!("{} iterations, {violations} support violations", out.trace.iterations());
    Ok(())
}
