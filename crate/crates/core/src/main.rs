use anyhow::{bail, Context, Result};
use appl_moments::bench::run_bench;
use appl_moments::interp::{estimate_moments, SimulationConfig, DEFAULT_STEP_LIMIT};
use appl_moments::lp::export_lp;
use appl_moments::pipeline::{export_problem, find_gamma0, load_program, parse_eval, run_analyze, AnalyzeOptions};
use appl_moments::postproc::{tail_curve, TailInputs};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "appl-moments", version, about = "Moment and tail bounds for probabilistic programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Solver {
    Builtin,
    Export,
}

#[derive(Args)]
struct Common {
    program: PathBuf,
    /// Highest moment order.
    #[arg(long = "moment", default_value_t = 2)]
    moment: usize,
    /// Template degree per moment order.
    #[arg(long = "degree", default_value_t = 1)]
    degree: u32,
    /// Valuation `k=v,...` of the initial state and the LP objective.
    #[arg(long)]
    eval: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Infer interval bounds on the raw moments and check soundness.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Solver::Builtin)]
        solver: Solver,
        /// Maximize the lower mean before minimizing the higher upper bounds.
        #[arg(long)]
        two_phase: bool,
        /// Also simulate this many trials and compare.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON report here (`-` for stdout).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Estimate cost moments by Monte-Carlo simulation.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Tail-probability bounds over a range of thresholds, as CSV.
    Tail {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check every program of a directory against its expectation sidecar.
    Bench {
        dir: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write the constraint system in LP text format.
    ExportLp {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        _ => {
            print!("{text}");
            Ok(())
        }
    }
}

fn options(c: &Common) -> Result<AnalyzeOptions> {
    if c.moment == 0 {
        bail!("--moment must be at least 1");
    }
    let mut o = AnalyzeOptions::new(c.moment, c.degree);
    if let Some(e) = &c.eval {
        o.eval = Some(parse_eval(e)?);
    }
    Ok(o)
}

fn load(c: &Common) -> Result<(appl_moments::lang::Program, String)> {
    let text = std::fs::read_to_string(&c.program).with_context(|| format!("reading {}", c.program.display()))?;
    let name = c.program.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok((load_program(&text)?, name))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Analyze { common, solver, two_phase, trials, seed, json } => {
            let (p, name) = load(&common)?;
            let mut opts = options(&common)?;
            if solver == Solver::Export {
                return write_out(None, &export_lp(&export_problem(&p, &opts)?));
            }
            opts.two_phase = two_phase;
            let mut report = run_analyze(&p, &name, &opts)?;
            if let Some(n) = trials {
                let cfg = SimulationConfig { trials: n, seed, step_limit: DEFAULT_STEP_LIMIT, m: opts.m };
                report.simulation = Some(estimate_moments(&p, &report.gamma0, &cfg));
            }
            match json {
                Some(path) => write_out(Some(&path), &(serde_json::to_string_pretty(&report.to_json())? + "\n"))?,
                None => print!("{}", report.to_text()),
            }
        }
        Cmd::Simulate { common, trials, seed, json } => {
            let (p, _) = load(&common)?;
            let init = match &common.eval {
                Some(e) => appl_moments::interp::valuation(&p, &parse_eval(e)?),
                None => find_gamma0(&p),
            };
            let cfg = SimulationConfig { trials, seed, step_limit: DEFAULT_STEP_LIMIT, m: common.moment };
            let est = estimate_moments(&p, &init, &cfg);
            write_out(json.as_deref(), &(serde_json::to_string_pretty(&est.to_json())? + "\n"))?;
        }
        Cmd::Tail { common, from, to, step, csv } => {
            let (p, name) = load(&common)?;
            let mut opts = options(&common)?;
            opts.check_soundness = false;
            let report = run_analyze(&p, &name, &opts)?;
            let bounds = appl_moments::pipeline::moment_bounds(&report.rows, &report.gamma0)
                .context("no moment bounds at this template degree")?;
            let inputs = TailInputs::from_bounds(&bounds, report.nonneg_cost);
            let u1 = inputs.upper[0].max(0.0);
            let start = from.unwrap_or_else(|| u1.ceil().max(1.0));
            let stop = to.unwrap_or(start * 4.0);
            if !(stop >= start && start > 0.0) {
                bail!("need 0 < --from <= --to");
            }
            let step = step.unwrap_or(((stop - start) / 20.0).max(f64::MIN_POSITIVE));
            let curve = tail_curve(&inputs, start, stop, step);
            write_out(csv.as_deref(), &curve.to_csv())?;
        }
        Cmd::Bench { dir, json } => {
            let summary = run_bench(&dir).with_context(|| format!("reading {}", dir.display()))?;
            for s in &summary.skipped {
                eprintln!("warning: {s} has no sidecar, skipped");
            }
            match json {
                Some(path) => write_out(Some(&path), &(serde_json::to_string_pretty(&summary)? + "\n"))?,
                None => print!("{}", summary.to_table()),
            }
            if !summary.all_pass() {
                std::process::exit(1);
            }
        }
        Cmd::ExportLp { common, output } => {
            let (p, _) = load(&common)?;
            let opts = options(&common)?;
            write_out(output.as_deref(), &export_lp(&export_problem(&p, &opts)?))?;
        }
    }
    Ok(())
}
