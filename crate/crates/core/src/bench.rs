//! Benchmark harness: analyzes every `.appl` file of a directory that has an
//! expectation sidecar `<stem>.expect.json` and checks the bounds.
//!
//! ```json
//! {"m": 2, "d": 1, "eval": "d=10",
//!  "upper": {"1": 24, "2": 648}, "lower": {"1": 20},
//!  "central": {"2": 248}, "tolerance": 1e-6, "sound": true,
//!  "simulate": {"trials": 100000, "seed": 1}}
//! ```

use crate::interp::{estimate_moments, SimulationConfig, DEFAULT_STEP_LIMIT};
use crate::pipeline::{load_program, parse_eval, run_analyze, AnalyzeOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Clone, Debug, Deserialize)]
pub struct Expectation {
    pub m: usize,
    #[serde(default = "one")]
    pub d: u32,
    #[serde(default)]
    pub eval: Option<String>,
    #[serde(default)]
    pub upper: BTreeMap<String, f64>,
    #[serde(default)]
    pub lower: BTreeMap<String, f64>,
    #[serde(default)]
    pub central: BTreeMap<String, f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub sound: Option<bool>,
    /// `false` when no bound may be found at this template degree.
    #[serde(default = "yes")]
    pub bounded: bool,
    #[serde(default)]
    pub simulate: Option<SimulateSpec>,
    /// Wall-clock budget for the analysis.
    #[serde(default)]
    pub max_seconds: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct SimulateSpec {
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> u32 {
    1
}
fn yes() -> bool {
    true
}
fn default_tolerance() -> f64 {
    1e-6
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub program: String,
    pub m: usize,
    pub d: u32,
    pub pass: bool,
    pub failures: Vec<String>,
    pub sound: Option<bool>,
    /// Every simulated raw moment within four standard errors of the bounds.
    pub simulation_agrees: Option<bool>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BenchSummary {
    pub rows: Vec<BenchRow>,
    pub skipped: Vec<String>,
}

impl BenchSummary {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<16} {:>2} {:>2} {:>6} {:>6} {:>6} {:>9}", "program", "m", "d", "result", "sound", "sim", "seconds");
        let flag = |b: Option<bool>| match b {
            Some(true) => "yes",
            Some(false) => "no",
            None => "-",
        };
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<16} {:>2} {:>2} {:>6} {:>6} {:>6} {:>9.3}",
                r.program,
                r.m,
                r.d,
                if r.pass { "pass" } else { "FAIL" },
                flag(r.sound),
                flag(r.simulation_agrees),
                r.seconds
            );
            for f in &r.failures {
                let _ = writeln!(s, "    {f}");
            }
        }
        for k in &self.skipped {
            let _ = writeln!(s, "skipped {k}: no sidecar");
        }
        s
    }
}

pub fn sidecar_path(program: &Path) -> PathBuf {
    program.with_extension("expect.json")
}

/// Checks one program against its expectation.
pub fn run_one(path: &Path, exp: &Expectation) -> BenchRow {
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let start = Instant::now();
    let mut row = BenchRow {
        program: name.clone(),
        m: exp.m,
        d: exp.d,
        pass: false,
        failures: Vec::new(),
        sound: None,
        simulation_agrees: None,
        seconds: 0.0,
    };
    let outcome = (|| -> Result<(), String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("read: {e}"))?;
        let p = load_program(&text).map_err(|e| e.to_string())?;
        let mut opts = AnalyzeOptions::new(exp.m, exp.d);
        if let Some(e) = &exp.eval {
            opts.eval = Some(parse_eval(e).map_err(|e| e.to_string())?);
        }
        let mut report = run_analyze(&p, &name, &opts).map_err(|e| e.to_string())?;
        row.seconds = start.elapsed().as_secs_f64();
        row.sound = Some(report.sound());
        let tol = exp.tolerance;
        let k_of = |key: &str| key.parse::<usize>().ok().filter(|k| (1..=exp.m).contains(k));
        for (key, want) in &exp.upper {
            let k = k_of(key).ok_or(format!("bad moment `{key}`"))?;
            match report.hi(k) {
                Some(v) if v <= want + tol => {}
                Some(v) => row.failures.push(format!("upper {k}: {v} > {want}")),
                None => row.failures.push(format!("upper {k}: no bound")),
            }
        }
        for (key, want) in &exp.lower {
            let k = k_of(key).ok_or(format!("bad moment `{key}`"))?;
            match report.lo(k) {
                Some(v) if v >= want - tol => {}
                Some(v) => row.failures.push(format!("lower {k}: {v} < {want}")),
                None => row.failures.push(format!("lower {k}: no bound")),
            }
        }
        for (key, want) in &exp.central {
            let k = k_of(key).ok_or(format!("bad moment `{key}`"))?;
            match report.central_upper(k) {
                Some(v) if v <= want + tol => {}
                Some(v) => row.failures.push(format!("central {k}: {v} > {want}")),
                None => row.failures.push(format!("central {k}: no bound")),
            }
        }
        let any_bound = report.rows.iter().any(|r| r.hi.is_some() || r.lo.is_some());
        if any_bound != exp.bounded {
            row.failures.push(format!("expected bounded = {}, got {any_bound}", exp.bounded));
        }
        if let Some(want) = exp.sound {
            if report.sound() != want {
                row.failures.push(format!("expected sound = {want}, got {}", report.sound()));
            }
        }
        if let Some(limit) = exp.max_seconds {
            if row.seconds > limit {
                row.failures.push(format!("took {:.3}s, budget {limit}s", row.seconds));
            }
        }
        if let Some(sim) = &exp.simulate {
            let cfg = SimulationConfig { trials: sim.trials, seed: sim.seed, step_limit: DEFAULT_STEP_LIMIT, m: exp.m };
            report.simulation = Some(estimate_moments(&p, &report.gamma0, &cfg));
            let agree = report.simulation_agrees(4.0).map(|v| v.iter().all(|b| *b));
            row.simulation_agrees = agree;
            if agree == Some(false) {
                row.failures.push("simulation outside the bounds by more than 4 SE".into());
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.failures.push(e);
    }
    if row.seconds == 0.0 {
        row.seconds = start.elapsed().as_secs_f64();
    }
    row.pass = row.failures.is_empty();
    row
}

/// Runs every program with a sidecar, concurrently; programs without one
/// are listed as skipped.
pub fn run_bench(dir: &Path) -> std::io::Result<BenchSummary> {
    let mut programs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "appl"))
        .collect();
    programs.sort();
    let mut jobs = Vec::new();
    let mut summary = BenchSummary::default();
    for p in programs {
        let side = sidecar_path(&p);
        let name = p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        match std::fs::read_to_string(&side) {
            Ok(text) => match serde_json::from_str::<Expectation>(&text) {
                Ok(exp) => jobs.push((p, exp)),
                Err(e) => summary.rows.push(BenchRow {
                    program: name,
                    m: 0,
                    d: 0,
                    pass: false,
                    failures: vec![format!("bad sidecar: {e}")],
                    sound: None,
                    simulation_agrees: None,
                    seconds: 0.0,
                }),
            },
            Err(_) => summary.skipped.push(name),
        }
    }
    let rows: Vec<BenchRow> = jobs.par_iter().map(|(p, exp)| run_one(p, exp)).collect();
    summary.rows.extend(rows);
    summary.rows.sort_by(|a, b| a.program.cmp(&b.program));
    Ok(summary)
}

/// A chain of `n` tail-recursive coupon-collector state functions: state
/// `s_i` pays one tick per draw and moves on with probability `(n − i)/n`.
pub fn coupon_chain(n: usize) -> String {
    let mut s = String::new();
    for i in 0..n {
        let next = if i + 1 < n { format!("call s{}", i + 1) } else { "skip".to_string() };
        let _ = write!(
            s,
            "func s{i}() begin\n  tick(1);\n  if prob({}/{n}) then\n    {next}\n  else\n    call s{i}\n  fi\nend\n\n",
            n - i
        );
    }
    s.push_str("func main() begin\n  call s0\nend\n");
    s
}
