//! Checks every corpus program against its expectation sidecar.

use appl_moments::bench::run_bench;

fn main() -> anyhow::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus").into());
    let summary = run_bench(dir.as_ref())?;
    print!("{}", summary.to_table());
    Ok(())
}
