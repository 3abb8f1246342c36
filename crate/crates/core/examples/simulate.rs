//! Monte-Carlo estimates of the cost moments of the integer random walk,
//! next to the statically inferred intervals.

use appl_moments::interp::{estimate_moments, SimulationConfig, DEFAULT_STEP_LIMIT};
use appl_moments::pipeline::{load_program, run_analyze, AnalyzeOptions};

const WALK: &str = include_str!("../../../corpus/walk21.appl");

fn main() -> anyhow::Result<()> {
    let p = load_program(WALK)?;
    let opts = AnalyzeOptions::new(2, 1).eval(&[("x", 3)]);
    let mut report = run_analyze(&p, "walk21", &opts)?;
    let cfg = SimulationConfig { trials: 200_000, seed: 42, step_limit: DEFAULT_STEP_LIMIT, m: 2 };
    let sim = estimate_moments(&p, &report.gamma0, &cfg);
    for k in 1..=2 {
        println!(
            "E[X^{k}]: simulated {:.2} ± {:.2}, inferred [{:?}, {:?}]",
            sim.raw[k - 1],
            sim.stderr[k - 1],
            report.lo(k),
            report.hi(k)
        );
    }
    report.simulation = Some(sim);
    println!("within 4 SE: {:?}", report.simulation_agrees(4.0));
    Ok(())
}
