//! Recover a low-rank matrix from sparse, corrupted observations with the
//! oracle threshold schedule and with a hand-set decaying schedule.

use lrmc::problems::generate_synthetic;
use lrmc::schedules::{LearnedSchedule, ParamSchedule, RecurrentTail};
use lrmc::solver::{solve, StopRule};

fn main() -> lrmc::Result<()> {
    let inst = generate_synthetic(300, 300, 5, 0.5, 0.1, 1)?;
    let stop = StopRule::truth_relative(1e-6).with_max_iters(300);

    let oracle = solve(&inst.observed, 5, &ParamSchedule::oracle(0.5)?, stop, Some(&inst.truth))?;
    report("oracle", &oracle.trace);

    // geometric decay from the largest observed entry
    let zeta0 = inst.observed.data().values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let hand = LearnedSchedule::new(vec![zeta0, 0.5 * zeta0], vec![0.5], Some(RecurrentTail { beta: 1.0, phi: 0.9 }))?;
    let out = solve(&inst.observed, 5, &ParamSchedule::Learned(hand), stop, Some(&inst.truth))?;
    report("decay 0.9", &out.trace);
    Ok(())
}

fn report(name: &str, trace: &lrmc::solver::SolveTrace) {
    println!("{name}:");
    for rec in trace.records.iter().filter(|r| r.k % 10 == 0) {
        println!("  k = {:3}  rel err {:.3e}  |supp S| = {}", rec.k, rec.rel_err.unwrap_or(f64::NAN), rec.supp_size);
    }
    let last = trace.last().unwrap();
    println!("  stopped at k = {} with {:.3e}", last.k, last.rel_err.unwrap_or(f64::NAN));
}
