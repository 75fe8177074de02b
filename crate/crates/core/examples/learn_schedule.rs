//! Train a short feed-forward schedule layer by layer, search its recurrent
//! tail, then compare it with a fixed schedule on fresh instances.

use lrmc::problems::SyntheticSpec;
use lrmc::schedules::ParamSchedule;
use lrmc::training::{evaluate, rel_errors_at, train_frmnn, EvalConfig, ProblemDistribution, TrainConfig};

fn main() -> lrmc::Result<()> {
    let dist = ProblemDistribution::new(SyntheticSpec::square(60, 2, 1.0, 0.1), 2024);
    let cfg = TrainConfig {
        steps_per_stage: 40,
        eval_pool_size: 8,
        ..TrainConfig::with_depth(4)
    };
    let t = std::time::Instant::now();
    let (schedule, trained, grid) = train_frmnn(&dist, &cfg, None)?;
    println!("trained in {:.1?} ({} rejected steps)", t.elapsed(), trained.rejected_steps);
    println!("zeta = {:.4?}", schedule.zeta());
    println!("eta  = {:.4?}", schedule.eta());
    println!("tail beta = {}, phi = {} (mean loss {:.3e})", grid.tail.beta, grid.tail.phi, grid.mean_loss);
    for stage in 0..=cfg.depth {
        if let Some((first, last)) = trained.stage_running(stage) {
            println!("stage {stage}: running loss {first:.3e} -> {last:.3e}");
        }
    }

    let test = ProblemDistribution::new(dist.spec, 77).eval_pool(10)?;
    let learned = ParamSchedule::Learned(schedule);
    let fixed = ParamSchedule::fixed(0.1, 0.5)?;
    for (name, s) in [("learned", &learned), ("fixed", &fixed)] {
        let at_k = rel_errors_at(s, &test, cfg.depth);
        let mean = at_k.iter().sum::<f64>() / at_k.len() as f64;
        let report = evaluate(s, &test, &EvalConfig::default())?;
        println!(
            "{name:>7}: mean rel err at k = {} {mean:.3e}; {}/{} reach 1e-6, mean {:.1} iterations",
            cfg.depth, report.successes, report.trials, report.mean_iterations.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
