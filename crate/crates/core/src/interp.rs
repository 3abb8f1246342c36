//! Small-step interpreter with explicit continuations and a Monte-Carlo
//! estimator of the moments of the accumulated cost.
//!
//! Program values are exact. Dyadic rationals (the only values produced by
//! uniform draws over dyadic bounds) use a fast `i128` mantissa path and fall
//! back to big rationals on overflow or for other denominators.

use crate::lang::{Cond, Dist, Expr, Program, Stmt};
use crate::num::{to_f64, Rat};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::cmp::Ordering;

pub const DEFAULT_STEP_LIMIT: u64 = 10_000_000;

/// An exact program value.
#[derive(Clone, Debug)]
pub enum Val {
    /// `m · 2^e`
    Dy(i128, i32),
    Big(Rat),
}

impl Val {
    pub fn from_rat(r: &Rat) -> Val {
        let d = r.denom();
        if d.is_one() {
            if let Some(m) = r.numer().to_i128() {
                return Val::Dy(m, 0).norm();
            }
        }
        let tz = d.trailing_zeros().unwrap_or(0);
        if (d >> tz as usize).is_one() && tz < 200 {
            if let Some(m) = r.numer().to_i128() {
                return Val::Dy(m, -(tz as i32)).norm();
            }
        }
        Val::Big(r.clone())
    }

    pub fn to_rat(&self) -> Rat {
        match self {
            Val::Big(r) => r.clone(),
            Val::Dy(m, e) => {
                let m = BigInt::from(*m);
                if *e >= 0 {
                    Rat::from_integer(m << (*e as usize))
                } else {
                    Rat::new(m, BigInt::one() << ((-*e) as usize))
                }
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Val::Dy(m, e) => (*m as f64) * 2f64.powi(*e),
            Val::Big(r) => to_f64(r),
        }
    }

    fn norm(self) -> Val {
        match self {
            Val::Dy(0, _) => Val::Dy(0, 0),
            Val::Dy(m, e) => {
                let tz = m.trailing_zeros().min(120) as i32;
                Val::Dy(m >> tz, e + tz)
            }
            b => b,
        }
    }

    fn align(a: i128, ea: i32, b: i128, eb: i32) -> Option<(i128, i128, i32)> {
        if ea == eb {
            return Some((a, b, ea));
        }
        let (hi, hi_e, lo, lo_e, swapped) = if ea > eb { (a, ea, b, eb, false) } else { (b, eb, a, ea, true) };
        let shift = (hi_e - lo_e) as u32;
        if shift >= 126 {
            return None;
        }
        let scaled = hi.checked_mul(1i128 << shift)?;
        if swapped {
            Some((lo, scaled, lo_e))
        } else {
            Some((scaled, lo, lo_e))
        }
    }

    pub fn add(&self, o: &Val) -> Val {
        if let (Val::Dy(a, ea), Val::Dy(b, eb)) = (self, o) {
            if let Some((x, y, e)) = Self::align(*a, *ea, *b, *eb) {
                if let Some(s) = x.checked_add(y) {
                    return Val::Dy(s, e).norm();
                }
            }
        }
        Val::from_rat(&(self.to_rat() + o.to_rat()))
    }

    pub fn mul(&self, o: &Val) -> Val {
        if let (Val::Dy(a, ea), Val::Dy(b, eb)) = (self, o) {
            if let (Some(p), Some(e)) = (a.checked_mul(*b), ea.checked_add(*eb)) {
                return Val::Dy(p, e).norm();
            }
        }
        Val::from_rat(&(self.to_rat() * o.to_rat()))
    }

    pub fn cmp_val(&self, o: &Val) -> Ordering {
        if let (Val::Dy(a, ea), Val::Dy(b, eb)) = (self, o) {
            if let Some((x, y, _)) = Self::align(*a, *ea, *b, *eb) {
                return x.cmp(&y);
            }
        }
        self.to_rat().cmp(&o.to_rat())
    }
}

fn eval_expr(e: &Expr, p: &Program, vals: &[Val]) -> Val {
    match e {
        Expr::Var(x) => vals[p.var_index(x).expect("declared variable")].clone(),
        Expr::Const(c) => Val::from_rat(c),
        Expr::Add(a, b) => eval_expr(a, p, vals).add(&eval_expr(b, p, vals)),
        Expr::Mul(a, b) => eval_expr(a, p, vals).mul(&eval_expr(b, p, vals)),
    }
}

fn eval_cond(c: &Cond, p: &Program, vals: &[Val]) -> bool {
    match c {
        Cond::True => true,
        Cond::Not(x) => !eval_cond(x, p, vals),
        Cond::And(a, b) => eval_cond(a, p, vals) && eval_cond(b, p, vals),
        Cond::Le(a, b) => eval_expr(a, p, vals).cmp_val(&eval_expr(b, p, vals)) != Ordering::Greater,
    }
}

/// A uniform draw in `[0, 1)` with 53 random bits, as an exact dyadic.
fn unit_draw(rng: &mut impl Rng) -> Val {
    let k: u64 = rng.gen::<u64>() >> 11;
    Val::Dy(k as i128, -53).norm()
}

fn sample(d: &Dist, rng: &mut impl Rng) -> Val {
    match d {
        Dist::Uniform(a, b) => {
            let u = unit_draw(rng);
            let a = Val::from_rat(a);
            let w = Val::from_rat(&(b - a.to_rat()));
            a.add(&w.mul(&u))
        }
        Dist::Discrete(pts) => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (v, p) in pts {
                acc += to_f64(p);
                if u < acc {
                    return Val::from_rat(v);
                }
            }
            Val::from_rat(&pts.last().expect("nonempty support").0)
        }
    }
}

/// Continuation frames; the stack bottom is `Kstop`.
#[derive(Clone, Debug)]
pub enum Kont<'p> {
    /// Run the statement next.
    Seq(&'p Stmt),
    /// Re-evaluate this `while` statement next.
    Loop(&'p Stmt),
}

static SKIP: Stmt = Stmt::Skip;

/// `⟨γ, S, K, α⟩`.
#[derive(Clone, Debug)]
pub struct Config<'p> {
    pub vals: Vec<Val>,
    pub stmt: &'p Stmt,
    pub kont: Vec<Kont<'p>>,
    pub cost: Rat,
}

impl<'p> Config<'p> {
    pub fn initial(p: &'p Program, init: &[Rat]) -> Config<'p> {
        Config { vals: init.iter().map(Val::from_rat).collect(), stmt: &p.main, kont: Vec::new(), cost: Rat::zero() }
    }
    pub fn is_terminal(&self) -> bool {
        matches!(self.stmt, Stmt::Skip) && self.kont.is_empty()
    }
}

/// Applies one evaluation rule. Terminal configurations are left unchanged.
pub fn step<'p>(p: &'p Program, c: &mut Config<'p>, rng: &mut impl Rng) {
    match c.stmt {
        Stmt::Skip => match c.kont.pop() {
            None => {}
            Some(Kont::Seq(s)) | Some(Kont::Loop(s)) => c.stmt = s,
        },
        Stmt::Tick(k) => {
            c.cost += k;
            c.stmt = &SKIP;
        }
        Stmt::Assign(x, e) => {
            let v = eval_expr(e, p, &c.vals);
            c.vals[p.var_index(x).expect("declared variable")] = v;
            c.stmt = &SKIP;
        }
        Stmt::Sample(x, d) => {
            let v = sample(d, rng);
            c.vals[p.var_index(x).expect("declared variable")] = v;
            c.stmt = &SKIP;
        }
        Stmt::Call(f) => c.stmt = p.body(f).expect("declared function"),
        Stmt::While(g, body) => {
            if eval_cond(g, p, &c.vals) {
                c.kont.push(Kont::Loop(c.stmt));
                c.stmt = body;
            } else {
                c.stmt = &SKIP;
            }
        }
        Stmt::Prob(q, a, b) => {
            let u: f64 = rng.gen();
            c.stmt = if u < to_f64(q) { a } else { b };
        }
        Stmt::If(g, a, b) => c.stmt = if eval_cond(g, p, &c.vals) { a } else { b },
        Stmt::Seq(a, b) => {
            c.kont.push(Kont::Seq(b));
            c.stmt = a;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceResult {
    pub cost: Rat,
    pub steps: u64,
    pub terminated: bool,
}

/// Runs from `⟨init, S_main, Kstop, 0⟩` until termination or `step_limit`.
pub fn run_trace(p: &Program, init: &[Rat], rng: &mut impl Rng, step_limit: u64) -> TraceResult {
    let mut c = Config::initial(p, init);
    let mut steps = 0;
    while !c.is_terminal() {
        if steps >= step_limit {
            return TraceResult { cost: c.cost, steps, terminated: false };
        }
        step(p, &mut c, rng);
        steps += 1;
    }
    TraceResult { cost: c.cost, steps, terminated: true }
}

/// The generator for trial `i`: one ChaCha stream per trial under `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(trial);
    r
}

/// The all-zero valuation with the given overrides.
pub fn valuation(p: &Program, overrides: &[(String, Rat)]) -> Vec<Rat> {
    let mut v = vec![Rat::zero(); p.vars.len()];
    for (name, val) in overrides {
        if let Some(i) = p.var_index(name) {
            v[i] = val.clone();
        }
    }
    v
}

#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub trials: u64,
    pub seed: u64,
    pub step_limit: u64,
    pub m: usize,
}

/// Monte-Carlo estimates of the cost moments.
#[derive(Clone, Debug)]
pub struct EmpiricalMoments {
    pub trials: u64,
    /// `raw[k-1] = mean of X^k`.
    pub raw: Vec<f64>,
    /// Standard error of each raw moment estimate.
    pub stderr: Vec<f64>,
    /// `central[k-1]` for `k ≥ 2`; `None` for `k = 1`.
    pub central: Vec<Option<f64>>,
    pub nonterminated: u64,
    /// Per-trial costs in trial order.
    pub costs: Vec<f64>,
}

impl EmpiricalMoments {
    /// Empirical `P[X ≥ a]` and its standard error.
    pub fn tail(&self, a: f64) -> (f64, f64) {
        let n = self.costs.len() as f64;
        let hits = self.costs.iter().filter(|c| **c >= a).count() as f64;
        let p = hits / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let moments: Vec<serde_json::Value> = (0..self.raw.len())
            .map(|i| {
                serde_json::json!({
                    "k": i + 1,
                    "raw": self.raw[i],
                    "central": self.central[i],
                    "stderr": self.stderr[i],
                })
            })
            .collect();
        serde_json::json!({
            "trials": self.trials,
            "moments": moments,
            "nonterminated": self.nonterminated,
        })
    }
}

pub fn estimate_moments(p: &Program, init: &[Rat], cfg: &SimulationConfig) -> EmpiricalMoments {
    const CHUNK: u64 = 4096;
    let chunks: Vec<u64> = (0..cfg.trials.div_ceil(CHUNK)).collect();
    let parts: Vec<(Vec<f64>, u64)> = chunks
        .par_iter()
        .map(|ci| {
            let lo = ci * CHUNK;
            let hi = (lo + CHUNK).min(cfg.trials);
            let mut costs = Vec::with_capacity((hi - lo) as usize);
            let mut bad = 0;
            for t in lo..hi {
                let mut rng = trial_rng(cfg.seed, t);
                let r = run_trace(p, init, &mut rng, cfg.step_limit);
                if !r.terminated {
                    bad += 1;
                }
                costs.push(to_f64(&r.cost));
            }
            (costs, bad)
        })
        .collect();
    let mut costs = Vec::with_capacity(cfg.trials as usize);
    let mut nonterminated = 0;
    for (c, b) in parts {
        costs.extend(c);
        nonterminated += b;
    }
    summarize(costs, cfg.m, nonterminated)
}

fn summarize(costs: Vec<f64>, m: usize, nonterminated: u64) -> EmpiricalMoments {
    let n = costs.len() as f64;
    let mut raw = vec![0.0; m];
    let mut sq = vec![0.0; m];
    for c in &costs {
        let mut pw = 1.0;
        for k in 0..m {
            pw *= c;
            raw[k] += pw;
            sq[k] += pw * pw;
        }
    }
    let mut stderr = vec![0.0; m];
    for k in 0..m {
        raw[k] /= n;
        let var = (sq[k] / n - raw[k] * raw[k]).max(0.0);
        stderr[k] = (var / (n - 1.0).max(1.0)).sqrt();
    }
    let mean = raw.first().copied().unwrap_or(0.0);
    let mut central = vec![None; m];
    for (k, slot) in central.iter_mut().enumerate().skip(1) {
        let e = k as i32 + 1;
        let s: f64 = costs.iter().map(|c| (c - mean).powi(e)).sum();
        *slot = Some(s / n);
    }
    EmpiricalMoments { trials: costs.len() as u64, raw, stderr, central, nonterminated, costs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;
    use crate::num::{rat, ratio};

    #[test]
    fn dyadic_arithmetic_is_exact() {
        let a = Val::from_rat(&ratio(3, 8));
        let b = Val::from_rat(&ratio(-5, 4));
        assert_eq!(a.add(&b).to_rat(), ratio(-7, 8));
        assert_eq!(a.mul(&b).to_rat(), ratio(-15, 32));
        let third = Val::from_rat(&ratio(1, 3));
        assert_eq!(third.add(&a).to_rat(), ratio(17, 24));
        assert_eq!(a.cmp_val(&b), Ordering::Greater);
    }

    #[test]
    fn tick_program_is_deterministic() {
        let p = parse_program("func main() begin tick(3) end").unwrap();
        let mut rng = trial_rng(1, 0);
        let r = run_trace(&p, &valuation(&p, &[]), &mut rng, 100);
        assert_eq!(r.cost, rat(3));
        assert!(r.terminated);
    }

    #[test]
    fn skip_takes_no_steps() {
        let p = parse_program("func main() begin skip end").unwrap();
        let mut rng = trial_rng(1, 0);
        let r = run_trace(&p, &[], &mut rng, 100);
        assert_eq!((r.steps, r.cost, r.terminated), (0, rat(0), true));
    }
}
