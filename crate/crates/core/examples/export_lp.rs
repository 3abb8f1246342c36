//! Writes the constraint system of the random walk in LP format, for an
//! external solver.

use appl_moments::lp::export_lp;
use appl_moments::pipeline::{export_problem, load_program, AnalyzeOptions};

fn main() -> anyhow::Result<()> {
    let p = load_program(include_str!("../../../corpus/rdwalk.appl"))?;
    let problem = export_problem(&p, &AnalyzeOptions::new(2, 1).eval(&[("d", 10)]))?;
    print!("{}", export_lp(&problem));
    Ok(())
}
