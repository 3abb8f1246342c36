//! Markov, Cantelli and Chebyshev tail bounds for the coupon collector,
//! printed as CSV.

use appl_moments::pipeline::{moment_bounds, run_analyze, load_program, AnalyzeOptions};
use appl_moments::postproc::{tail_curve, TailInputs};

const COUPON: &str = include_str!("../../../corpus/coupon11.appl");

fn main() -> anyhow::Result<()> {
    let p = load_program(COUPON)?;
    let mut opts = AnalyzeOptions::new(4, 1);
    opts.check_soundness = false;
    let report = run_analyze(&p, "coupon11", &opts)?;
    let bounds = moment_bounds(&report.rows, &report.gamma0).ok_or_else(|| anyhow::anyhow!("no bounds"))?;
    let inputs = TailInputs::from_bounds(&bounds, report.nonneg_cost);
    print!("{}", tail_curve(&inputs, 15.0, 60.0, 5.0).to_csv());
    Ok(())
}
