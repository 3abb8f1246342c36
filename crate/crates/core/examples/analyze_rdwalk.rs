//! Bounds on the first two moments of the recursive random walk, as
//! polynomials in `d`, plus the derived variance bound.
//!
//! ```bash
//! cargo run --example analyze_rdwalk -- 25
//! ```

use appl_moments::pipeline::{analyze_source, AnalyzeOptions};

const RDWALK: &str = include_str!("../../../corpus/rdwalk.appl");

fn main() -> anyhow::Result<()> {
    let d: i64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(10);
    let opts = AnalyzeOptions::new(2, 1).eval(&[("d", d)]);
    let report = analyze_source(RDWALK, "rdwalk", &opts)?;
    print!("{}", report.to_text());
    if let Some(v) = report.central_upper(2) {
        println!("variance at d = {d} is at most {v}");
    }
    Ok(())
}
