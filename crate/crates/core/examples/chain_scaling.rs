//! Analysis time on chains of coupon-collector state functions.

use appl_moments::bench::coupon_chain;
use appl_moments::pipeline::{analyze_source, AnalyzeOptions};
use std::time::Instant;

fn main() -> anyhow::Result<()> {
    for n in [10, 25, 50, 100] {
        let text = coupon_chain(n);
        let start = Instant::now();
        let r = analyze_source(&text, "chain", &AnalyzeOptions::new(2, 1))?;
        println!(
            "N = {n:>3}: E[X] <= {:?}, {} LP unknowns, {:.3}s",
            r.hi(1),
            r.lp.vars,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
