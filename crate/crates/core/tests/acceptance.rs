//! Acceptance run: every criterion at its stated tolerance, one pass/fail
//! line each. Run with `--nocapture` to see the lines.

mod props;

use appl_moments::analysis::{analyze_program, expr_poly, AnalysisConfig, Derivation};
use appl_moments::bench::{coupon_chain, sidecar_path, Expectation};
use appl_moments::interp::{estimate_moments, SimulationConfig, DEFAULT_STEP_LIMIT};
use appl_moments::lang::{parse_expr, Program};
use appl_moments::lp::solve_exact;
use appl_moments::num::to_f64;
use appl_moments::pipeline::{load_program, moment_bounds, parse_eval, run_analyze, AnalyzeOptions};
use appl_moments::poly::{Annotation, RatAnnotation, SymbolicInterval};
use appl_moments::postproc::{tail_cantelli, tail_markov, TailInputs};
use appl_moments::report::AnalysisReport;
use std::path::PathBuf;
use std::time::Instant;

const TOL: f64 = 1e-6;

fn corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn program(name: &str) -> Program {
    let text = std::fs::read_to_string(corpus().join(format!("{name}.appl"))).expect("corpus program");
    load_program(&text).expect("valid corpus program")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: Vec<String>, ok_detail: String) -> Outcome {
    if failures.is_empty() {
        Outcome { pass: true, detail: ok_detail }
    } else {
        Outcome { pass: false, detail: failures.join("; ") }
    }
}

fn timed_analyze(p: &Program, name: &str, opts: &AnalyzeOptions) -> (AnalysisReport, f64) {
    let start = Instant::now();
    let r = run_analyze(p, name, opts).expect("analysis runs");
    (r, start.elapsed().as_secs_f64())
}

fn le(failures: &mut Vec<String>, what: &str, got: Option<f64>, bound: f64) {
    match got {
        Some(v) if v <= bound + TOL => {}
        Some(v) => failures.push(format!("{what} = {v} > {bound}")),
        None => failures.push(format!("{what}: no bound")),
    }
}

fn ge(failures: &mut Vec<String>, what: &str, got: Option<f64>, bound: f64) {
    match got {
        Some(v) if v >= bound - TOL => {}
        Some(v) => failures.push(format!("{what} = {v} < {bound}")),
        None => failures.push(format!("{what}: no bound")),
    }
}

fn running_example() -> Outcome {
    let p = program("rdwalk");
    let mut failures = Vec::new();
    let mut slowest: f64 = 0.0;
    for d in [1i64, 10, 100] {
        let df = d as f64;
        let opts = AnalyzeOptions::new(2, 1).eval(&[("d", d), ("x", 0)]);
        let (r, secs) = timed_analyze(&p, "rdwalk", &opts);
        slowest = slowest.max(secs);
        le(&mut failures, &format!("d={d} hi1"), r.hi(1), 2.0 * df + 4.0);
        le(&mut failures, &format!("d={d} hi2"), r.hi(2), 4.0 * df * df + 22.0 * df + 28.0);
        ge(&mut failures, &format!("d={d} lo1"), r.lo(1), 2.0 * df);
        le(&mut failures, &format!("d={d} variance"), r.central_upper(2), 22.0 * df + 28.0);
        if secs >= 5.0 {
            failures.push(format!("d={d} took {secs:.2}s"));
        }
    }
    outcome(failures, format!("slowest analysis {slowest:.3}s"))
}

/// Pins the spec templates of the recursive walk to the annotations of the
/// fully annotated derivation and checks exact feasibility.
fn annotated_walk(hi1: &str) -> Result<bool, String> {
    let p = program("rdwalk");
    let poly = |s: &str| expr_poly(&p, &parse_expr(s).expect("annotation parses"));
    let ann = |c: &[(&str, &str)]| -> RatAnnotation {
        Annotation { comps: c.iter().map(|(l, h)| SymbolicInterval { lo: poly(l), hi: poly(h) }).collect() }
    };
    let mut der: Derivation = analyze_program(&p, AnalysisConfig::moments(2, 1)).map_err(|e| e.to_string())?;
    // Level 0: the function specification itself.
    let pre0 = ann(&[("1", "1"), ("2*(d-x)", hi1), ("4*(d-x)*(d-x) + 6*(d-x) - 4", "4*(d-x)*(d-x) + 22*(d-x) + 28")]);
    let post0 = ann(&[("1", "1"), ("0", "0"), ("0", "0")]);
    // Level 1: the frame for post ⟨0,1,1⟩. Its lower second-moment endpoint is
    // the difference of the annotated lower endpoints before the call.
    let pre1 = ann(&[("0", "0"), ("1", "1"), ("4*(d-x) + 1", "4*(d-x) + 9")]);
    let post1 = ann(&[("0", "0"), ("1", "1"), ("1", "1")]);
    // Level 2: the frame for post ⟨0,0,2⟩ is moment-monomorphic.
    let pre2 = ann(&[("0", "0"), ("0", "0"), ("2", "2")]);
    let instances = der.instances.clone();
    let mut pinned = [0usize; 3];
    for s in &instances {
        if s.func != "rdwalk" {
            continue;
        }
        let (pre, post) = match s.h {
            0 => (&pre0, &post0),
            1 => (&pre1, &post1),
            _ => (&pre2, &pre2),
        };
        der.pin(&s.pre, pre, "annotated:pre");
        der.pin(&s.post, post, "annotated:post");
        pinned[s.h.min(2)] += 1;
    }
    if pinned.iter().any(|n| *n == 0) {
        return Err(format!("expected instances at every level, got {pinned:?}"));
    }
    let sol = solve_exact(&der.problem);
    Ok(sol.is_optimal() && sol.exact)
}

fn annotation_feasibility() -> Outcome {
    let mut failures = Vec::new();
    match annotated_walk("2*(d-x) + 4") {
        Ok(true) => {}
        Ok(false) => failures.push("annotations infeasible".into()),
        Err(e) => failures.push(e),
    }
    // Control: a first-moment bound one unit too tight must be rejected.
    match annotated_walk("2*(d-x) + 3") {
        Ok(false) => {}
        Ok(true) => failures.push("too-tight control accepted".into()),
        Err(e) => failures.push(e),
    }
    outcome(failures, "exact rational feasibility; tightened control rejected".into())
}

fn benchmarks() -> Outcome {
    let mut failures = Vec::new();
    let mut times = Vec::new();
    let coupon = program("coupon11");
    let (r, secs) = timed_analyze(&coupon, "coupon11", &AnalyzeOptions::new(4, 1));
    times.push(secs);
    for (k, b) in [(2, 201.0), (3, 3829.0), (4, 90705.0)] {
        le(&mut failures, &format!("coupon raw{k}"), r.hi(k), b);
    }
    le(&mut failures, "coupon central2", r.central_upper(2), 32.0);
    le(&mut failures, "coupon central4", r.central_upper(4), 9728.0);
    let walk = program("walk21");
    let (r, secs) = timed_analyze(&walk, "walk21", &AnalyzeOptions::new(4, 1).eval(&[("x", 1)]));
    times.push(secs);
    le(&mut failures, "walk raw2", r.hi(2), 2320.0);
    le(&mut failures, "walk central2", r.central_upper(2), 1920.0);
    le(&mut failures, "walk central4", r.central_upper(4), 289873920.0);
    for (name, s) in ["coupon", "walk"].iter().zip(&times) {
        if *s >= 10.0 {
            failures.push(format!("{name} took {s:.2}s"));
        }
    }
    outcome(failures, format!("coupon {:.3}s, walk {:.3}s", times[0], times[1]))
}

const TRIALS: u64 = 1_000_000;

fn oracle_agreement() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(corpus())
        .expect("corpus dir")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "appl"))
        .collect();
    entries.sort();
    for path in entries {
        let Ok(text) = std::fs::read_to_string(sidecar_path(&path)) else { continue };
        let exp: Expectation = serde_json::from_str(&text).expect("sidecar parses");
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let p = program(&name);
        let mut opts = AnalyzeOptions::new(exp.m, exp.d);
        if let Some(e) = &exp.eval {
            opts.eval = Some(parse_eval(e).expect("sidecar eval"));
        }
        let mut r = run_analyze(&p, &name, &opts).expect("analysis runs");
        if !r.sound() {
            continue;
        }
        let cfg = SimulationConfig { trials: TRIALS, seed: 7, step_limit: DEFAULT_STEP_LIMIT, m: exp.m };
        let sim = estimate_moments(&p, &r.gamma0, &cfg);
        if sim.nonterminated > 0 {
            failures.push(format!("{name}: {} runs hit the step limit", sim.nonterminated));
        }
        r.simulation = Some(sim.clone());
        for (k, ok) in r.simulation_agrees(4.0).unwrap().iter().enumerate() {
            if !ok {
                failures.push(format!("{name}: raw moment {} = {} outside the bounds", k + 1, sim.raw[k]));
            }
        }
        if let Some(b) = moment_bounds(&r.rows, &r.gamma0) {
            let inputs = TailInputs::from_bounds(&b, r.nonneg_cost);
            let u1 = inputs.upper[0].max(1.0);
            for f in [1.25, 1.5, 2.0, 3.0, 4.0] {
                let a = u1 * f;
                if let Some(bound) = inputs.row(a).min {
                    let (freq, se) = sim.tail(a);
                    if freq > bound + 4.0 * se {
                        failures.push(format!("{name}: P[X >= {a}] ~ {freq} exceeds bound {bound}"));
                    }
                }
            }
        }
        checked.push(name);
    }
    outcome(failures, format!("{} trials each on {}", TRIALS, checked.join(", ")))
}

fn counterexample_guard() -> Outcome {
    let p = program("geo");
    let mut failures = Vec::new();
    let r = run_analyze(&p, "geo", &AnalyzeOptions::new(2, 1)).expect("analysis runs");
    let cfg = SimulationConfig { trials: TRIALS, seed: 11, step_limit: DEFAULT_STEP_LIMIT, m: 2 };
    let sim = estimate_moments(&p, &r.gamma0, &cfg);
    let limit = 1.0 + 4.0 * sim.stderr[0];
    match r.lo(1) {
        Some(l) if l <= limit => {}
        Some(l) => failures.push(format!("certified lower mean {l} above {limit}")),
        None => failures.push("no lower bound".into()),
    }
    if (sim.raw[0] - 1.0).abs() > 4.0 * sim.stderr[0] {
        failures.push(format!("simulated mean {} is not 1", sim.raw[0]));
    }
    match &r.soundness {
        Some(v) if v.termination.passed() => {}
        _ => failures.push("termination check failed".into()),
    }
    outcome(failures, format!("lower mean {:?}, simulated {:.4}", r.lo(1), sim.raw[0]))
}

fn tail_crossover() -> Outcome {
    let p = program("rdwalk");
    let mut failures = Vec::new();
    for d in 15i64..=100 {
        let mut opts = AnalyzeOptions::new(2, 1).eval(&[("d", d), ("x", 0)]);
        opts.check_soundness = false;
        let r = run_analyze(&p, "rdwalk", &opts).expect("analysis runs");
        let Some(b) = moment_bounds(&r.rows, &r.gamma0) else {
            failures.push(format!("d={d}: no bounds"));
            continue;
        };
        let inputs = TailInputs::from_bounds(&b, r.nonneg_cost);
        let a = 4.0 * d as f64;
        let u1 = to_f64(&b.hi_val[1]);
        let m1 = tail_markov(u1, a, 1);
        let m2 = tail_markov(to_f64(&b.hi_val[2]), a, 2);
        let c = inputs.variance_upper.and_then(|v| tail_cantelli(u1, v, a));
        match (c, m1, m2) {
            (Some(c), Some(m1), Some(m2)) => {
                if c >= m1 {
                    failures.push(format!("d={d}: Cantelli {c} >= Markov-1 {m1}"));
                }
                if d >= 20 && c >= m2 {
                    failures.push(format!("d={d}: Cantelli {c} >= Markov-2 {m2}"));
                }
            }
            _ => failures.push(format!("d={d}: missing tail bound")),
        }
    }
    outcome(failures, "d = 15..=100 at a = 4d".into())
}

fn property_suites() -> Outcome {
    let suites: [(&str, Box<dyn Fn() -> Result<(), String>>); 5] = [
        ("semiring laws", Box::new(|| props::semiring_laws(1000))),
        ("interval monotonicity", Box::new(|| props::interval_monotonicity(1000))),
        ("expectation vs quadrature", Box::new(|| props::expectation_vs_quadrature(1000, 1e-6))),
        ("simplex vs vertices", Box::new(|| props::simplex_vs_vertices(200, 1e-9))),
        ("interpreter", Box::new(|| props::interpreter_checks(50))),
    ];
    let failures = suites.iter().filter_map(|(n, f)| f().err().map(|e| format!("{n}: {e}"))).collect();
    outcome(failures, suites.iter().map(|s| s.0).collect::<Vec<_>>().join(", "))
}

fn chain_seconds(n: usize) -> f64 {
    let text = coupon_chain(n);
    let start = Instant::now();
    let p = load_program(&text).expect("chain parses");
    run_analyze(&p, "chain", &AnalyzeOptions::new(2, 1)).expect("analysis runs");
    start.elapsed().as_secs_f64()
}

fn scalability() -> Outcome {
    let sizes = [10usize, 50, 100];
    // Best of three damps scheduler noise on the short runs.
    let times: Vec<f64> =
        sizes.iter().map(|&n| (0..3).map(|_| chain_seconds(n)).fold(f64::INFINITY, f64::min)).collect();
    let xs: Vec<f64> = sizes.iter().map(|n| (*n as f64).ln()).collect();
    let ys: Vec<f64> = times.iter().map(|t| t.max(1e-4).ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let mut failures = Vec::new();
    if times[2] >= 60.0 {
        failures.push(format!("N=100 took {:.2}s", times[2]));
    }
    if slope > 2.0 {
        failures.push(format!("log-log slope {slope:.2} above 2"));
    }
    let detail = format!("times {:.3}/{:.3}/{:.3}s, slope {slope:.2}", times[0], times[1], times[2]);
    if failures.is_empty() {
        Outcome { pass: true, detail }
    } else {
        failures.push(detail);
        outcome(failures, String::new())
    }
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 running example bounds", running_example),
        ("2 annotated derivation feasible", annotation_feasibility),
        ("3 coupon and walk benchmarks", benchmarks),
        ("4 simulation inside bounds", oracle_agreement),
        ("5 counterexample guard", counterexample_guard),
        ("6 tail-bound crossover", tail_crossover),
        ("7 property suites", property_suites),
        ("8 coupon chain scalability", scalability),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let start = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("[{verdict}] criterion {name} ({:.1}s): {}", start.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
