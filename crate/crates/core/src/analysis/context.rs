//! Logical contexts: conjunctions of linear facts `Σ c_i x_i + c_0 ≥ 0`
//! inferred by a forward abstract interpretation.
//!
//! The domain keeps a set of facts per program point. Invertible assignments
//! are applied by substitution, other updates by Fourier–Motzkin projection.
//! Joins keep every candidate direction (facts of either side plus a fixed
//! set of program-derived templates) that is bounded on both sides, using
//! exact LP minimization. Strict inequalities are kept as their closure,
//! except over integer-declared variables where they are tightened.

use super::locs::{Loc, Locations};
use crate::lang::{Cond, Dist, Expr, Program, Stmt};
use crate::lp::simplex::{self, Outcome, StdLp};
use crate::lp::{Relation, VarKind};
use crate::num::{floor, integer_scale, ExtRat, Rat};
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

/// `Σ coeffs[i]·x_i + constant ≥ 0`, scaled to coprime integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinIneq {
    pub coeffs: BTreeMap<usize, Rat>,
    pub constant: Rat,
}

impl LinIneq {
    pub fn new(coeffs: BTreeMap<usize, Rat>, constant: Rat, ints: &BTreeSet<usize>) -> LinIneq {
        let coeffs: BTreeMap<usize, Rat> = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        if coeffs.is_empty() {
            return LinIneq { coeffs, constant };
        }
        let refs: Vec<&Rat> = coeffs.values().collect();
        let s = integer_scale(&refs);
        let coeffs: BTreeMap<usize, Rat> = coeffs.into_iter().map(|(v, c)| (v, c * &s)).collect();
        let mut constant = constant * &s;
        if coeffs.keys().all(|v| ints.contains(v)) {
            constant = floor(&constant);
        }
        LinIneq { coeffs, constant }
    }

    /// The fact `-(self.lhs) ≥ 0` with the same constant negated.
    pub fn negated_form(&self) -> LinIneq {
        LinIneq {
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, -c.clone())).collect(),
            constant: -self.constant.clone(),
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn eval(&self, val: &[Rat]) -> Rat {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * &val[*v];
        }
        acc
    }

    pub fn render(&self, names: &[String]) -> String {
        let mut s = String::new();
        for (i, (v, c)) in self.coeffs.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            if !a.is_one() {
                s.push_str(&format!("{}*", crate::num::fmt_rat(&a)));
            }
            s.push_str(&names[*v]);
        }
        if s.is_empty() {
            s.push('0');
        }
        if !self.constant.is_zero() {
            let neg = self.constant.is_negative();
            s.push_str(if neg { " - " } else { " + " });
            s.push_str(&crate::num::fmt_rat(&self.constant.abs()));
        }
        s.push_str(" >= 0");
        s
    }
}

/// A conjunction of linear facts; `Bottom` marks unreachable points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LogicalContext {
    Bottom,
    Facts(Vec<LinIneq>),
}

impl LogicalContext {
    pub fn top() -> Self {
        LogicalContext::Facts(Vec::new())
    }
    pub fn is_bottom(&self) -> bool {
        matches!(self, LogicalContext::Bottom)
    }
    pub fn facts(&self) -> &[LinIneq] {
        match self {
            LogicalContext::Bottom => &[],
            LogicalContext::Facts(f) => f,
        }
    }
    pub fn render(&self, names: &[String]) -> String {
        match self {
            LogicalContext::Bottom => "false".into(),
            LogicalContext::Facts(f) if f.is_empty() => "true".into(),
            LogicalContext::Facts(f) => f.iter().map(|x| x.render(names)).collect::<Vec<_>>().join(" and "),
        }
    }
    /// Holds at a concrete valuation.
    pub fn holds(&self, val: &[Rat]) -> bool {
        match self {
            LogicalContext::Bottom => false,
            LogicalContext::Facts(f) => f.iter().all(|x| !x.eval(val).is_negative()),
        }
    }
}

/// Minimum of `dir·x + c` over the facts: `PosInf` when infeasible, `NegInf`
/// when unbounded below.
pub fn lp_min(facts: &[LinIneq], dir: &BTreeMap<usize, Rat>, c: &Rat) -> ExtRat {
    let mut cols: BTreeMap<usize, usize> = BTreeMap::new();
    for f in facts {
        for v in f.vars() {
            let n = cols.len();
            cols.entry(v).or_insert(n);
        }
    }
    for v in dir.keys() {
        let n = cols.len();
        cols.entry(*v).or_insert(n);
    }
    let rows = facts
        .iter()
        .map(|f| {
            let coeffs = f.coeffs.iter().map(|(v, a)| (cols[v], a.clone())).collect();
            (coeffs, Relation::Ge, -f.constant.clone())
        })
        .collect();
    let lp = StdLp {
        kinds: vec![VarKind::Free; cols.len()],
        rows,
        cost: dir.iter().map(|(v, a)| (cols[v], a.clone())).collect(),
    };
    match simplex::solve(&lp) {
        Outcome::Optimal { objective, .. } => ExtRat::Fin(objective + c),
        Outcome::Infeasible => ExtRat::PosInf,
        Outcome::Unbounded => ExtRat::NegInf,
        Outcome::IterationLimit => ExtRat::NegInf,
    }
}

fn feasible(facts: &[LinIneq]) -> bool {
    if facts.iter().all(|f| f.coeffs.is_empty()) {
        return facts.iter().all(|f| !f.constant.is_negative());
    }
    lp_min(facts, &BTreeMap::new(), &Rat::zero()) != ExtRat::PosInf
}

/// Program-wide parameters of the domain.
pub struct Domain<'p> {
    pub prog: &'p Program,
    pub ints: BTreeSet<usize>,
    /// Extra join directions.
    pub templates: Vec<BTreeMap<usize, Rat>>,
}

/// Linear form of an expression over variable indices, if it is linear.
pub fn linear_form(p: &Program, e: &Expr) -> Option<(BTreeMap<usize, Rat>, Rat)> {
    let (m, c) = e.linear()?;
    let mut out = BTreeMap::new();
    for (name, a) in m {
        if !a.is_zero() {
            out.insert(p.var_index(&name)?, a);
        }
    }
    Some((out, c))
}

const MAX_FACTS: usize = 48;

impl<'p> Domain<'p> {
    pub fn new(prog: &'p Program) -> Self {
        let ints: BTreeSet<usize> = prog.ints.iter().filter_map(|v| prog.var_index(v)).collect();
        let mut d = Domain { prog, ints, templates: Vec::new() };
        d.templates = d.collect_templates();
        d
    }

    fn ineq(&self, coeffs: BTreeMap<usize, Rat>, constant: Rat) -> LinIneq {
        LinIneq::new(coeffs, constant, &self.ints)
    }

    /// `±x`, `±x ± y` for related pairs, and the guard and precondition forms.
    fn collect_templates(&self) -> Vec<BTreeMap<usize, Rat>> {
        let p = self.prog;
        let mut related: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut forms: Vec<BTreeMap<usize, Rat>> = Vec::new();
        let add_group = |vs: &BTreeSet<String>, related: &mut BTreeSet<(usize, usize)>| {
            let idx: Vec<usize> = vs.iter().filter_map(|v| p.var_index(v)).collect();
            for (i, a) in idx.iter().enumerate() {
                for b in &idx[i + 1..] {
                    related.insert((*a.min(b), *a.max(b)));
                }
            }
        };
        let mut conds: Vec<&Cond> = vec![&p.pre];
        let mut bodies: Vec<&Stmt> = vec![&p.main];
        bodies.extend(p.decls.values());
        for b in &bodies {
            b.visit(&mut |s| match s {
                Stmt::While(c, _) | Stmt::If(c, _, _) => conds.push(c),
                Stmt::Assign(x, e) => {
                    let mut vs = BTreeSet::new();
                    e.collect_vars(&mut vs);
                    vs.insert(x.clone());
                    add_group(&vs, &mut related);
                }
                _ => {}
            });
        }
        for c in conds {
            let mut vs = BTreeSet::new();
            c.collect_vars(&mut vs);
            add_group(&vs, &mut related);
            collect_atoms(c, &mut |a, b| {
                if let (Some((la, _)), Some((lb, _))) = (linear_form(p, a), linear_form(p, b)) {
                    let mut f = lb;
                    for (v, c) in la {
                        *f.entry(v).or_insert_with(Rat::zero) -= c;
                    }
                    f.retain(|_, c| !c.is_zero());
                    if !f.is_empty() {
                        forms.push(f);
                    }
                }
            });
        }
        let mut out: BTreeSet<BTreeMap<usize, Rat>> = BTreeSet::new();
        let one = Rat::one();
        for v in 0..p.vars.len() {
            out.insert(BTreeMap::from([(v, one.clone())]));
            out.insert(BTreeMap::from([(v, -one.clone())]));
        }
        for (a, b) in related {
            for (sa, sb) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                out.insert(BTreeMap::from([(a, Rat::from_integer(sa.into())), (b, Rat::from_integer(sb.into()))]));
            }
        }
        for f in forms {
            let neg: BTreeMap<usize, Rat> = f.iter().map(|(v, c)| (*v, -c.clone())).collect();
            out.insert(self.ineq(f, Rat::zero()).coeffs);
            out.insert(self.ineq(neg, Rat::zero()).coeffs);
        }
        out.into_iter().collect()
    }

    fn make(&self, mut facts: Vec<LinIneq>) -> LogicalContext {
        // Drop trivial facts, keep the tightest constant per direction.
        let mut best: BTreeMap<BTreeMap<usize, Rat>, Rat> = BTreeMap::new();
        for f in facts.drain(..) {
            if f.coeffs.is_empty() {
                if f.constant.is_negative() {
                    return LogicalContext::Bottom;
                }
                continue;
            }
            match best.get_mut(&f.coeffs) {
                Some(c) => {
                    if f.constant < *c {
                        *c = f.constant;
                    }
                }
                None => {
                    best.insert(f.coeffs, f.constant);
                }
            }
        }
        let facts: Vec<LinIneq> = best.into_iter().map(|(coeffs, constant)| LinIneq { coeffs, constant }).collect();
        if facts.is_empty() {
            return LogicalContext::Facts(facts);
        }
        if !feasible(&facts) {
            return LogicalContext::Bottom;
        }
        if facts.len() > MAX_FACTS {
            return LogicalContext::Facts(prune_redundant(facts));
        }
        LogicalContext::Facts(facts)
    }

    pub fn from_cond(&self, c: &Cond) -> LogicalContext {
        self.meet_cond(&LogicalContext::top(), c, true)
    }

    /// `ctx ∧ c` (or `ctx ∧ ¬c` when `positive` is false).
    pub fn meet_cond(&self, ctx: &LogicalContext, c: &Cond, positive: bool) -> LogicalContext {
        if ctx.is_bottom() {
            return LogicalContext::Bottom;
        }
        match (c, positive) {
            (Cond::True, true) => ctx.clone(),
            (Cond::True, false) => LogicalContext::Bottom,
            (Cond::Not(inner), pos) => self.meet_cond(ctx, inner, !pos),
            (Cond::And(a, b), true) => {
                let x = self.meet_cond(ctx, a, true);
                self.meet_cond(&x, b, true)
            }
            (Cond::And(a, b), false) => {
                let x = self.meet_cond(ctx, a, false);
                let y = self.meet_cond(ctx, b, false);
                self.join(&x, &y)
            }
            (Cond::Le(a, b), pos) => {
                let (la, lb) = match (linear_form(self.prog, a), linear_form(self.prog, b)) {
                    (Some(x), Some(y)) => (x, y),
                    _ => return ctx.clone(),
                };
                // pos: b - a ≥ 0; neg: a - b > 0.
                let (hi, lo) = if pos { (lb, la) } else { (la, lb) };
                let mut coeffs = hi.0;
                for (v, c) in lo.0 {
                    *coeffs.entry(v).or_insert_with(Rat::zero) -= c;
                }
                let constant = hi.1 - lo.1;
                let fact = if pos { self.ineq(coeffs, constant) } else { self.strict(coeffs, constant) };
                let mut facts = ctx.facts().to_vec();
                facts.push(fact);
                self.make(facts)
            }
        }
    }

    /// `Σ c x + c0 > 0`, closed over the reals and tightened over integers.
    fn strict(&self, coeffs: BTreeMap<usize, Rat>, constant: Rat) -> LinIneq {
        let coeffs: BTreeMap<usize, Rat> = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        if coeffs.is_empty() {
            // Constant comparison: c0 > 0.
            let c = if constant.is_positive() { Rat::zero() } else { -Rat::one() };
            return LinIneq { coeffs, constant: c };
        }
        let all_int = coeffs.keys().all(|v| self.ints.contains(v));
        let scaled = LinIneq::new(coeffs, constant, &BTreeSet::new());
        if all_int {
            // Σ c x > -c0  ⇔  Σ c x ≥ floor(-c0) + 1
            let k = floor(&-scaled.constant.clone()) + Rat::one();
            LinIneq { coeffs: scaled.coeffs, constant: -k }
        } else {
            scaled
        }
    }

    /// Removes every fact mentioning `x` by Fourier–Motzkin elimination.
    pub fn project(&self, ctx: &LogicalContext, x: usize) -> LogicalContext {
        let facts = match ctx {
            LogicalContext::Bottom => return LogicalContext::Bottom,
            LogicalContext::Facts(f) => f,
        };
        let mut keep = Vec::new();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for f in facts {
            match f.coeffs.get(&x) {
                None => keep.push(f.clone()),
                Some(c) if c.is_positive() => pos.push(f),
                Some(_) => neg.push(f),
            }
        }
        for p in &pos {
            for n in &neg {
                let a = p.coeffs[&x].clone();
                let b = -n.coeffs[&x].clone();
                let mut coeffs: BTreeMap<usize, Rat> = BTreeMap::new();
                for (v, c) in &p.coeffs {
                    *coeffs.entry(*v).or_insert_with(Rat::zero) += c * &b;
                }
                for (v, c) in &n.coeffs {
                    *coeffs.entry(*v).or_insert_with(Rat::zero) += c * &a;
                }
                coeffs.remove(&x);
                let constant = &p.constant * &b + &n.constant * &a;
                keep.push(self.ineq(coeffs, constant));
            }
        }
        self.make(keep)
    }

    pub fn havoc(&self, ctx: &LogicalContext, vars: &BTreeSet<usize>) -> LogicalContext {
        let mut c = ctx.clone();
        for v in vars {
            c = self.project(&c, *v);
        }
        c
    }

    pub fn assign(&self, ctx: &LogicalContext, x: usize, e: &Expr) -> LogicalContext {
        if ctx.is_bottom() {
            return LogicalContext::Bottom;
        }
        let (lin, c0) = match linear_form(self.prog, e) {
            Some(l) => l,
            None => return self.project(ctx, x),
        };
        let a = lin.get(&x).cloned().unwrap_or_else(Rat::zero);
        if !a.is_zero() {
            // x' = a x + r  ⇒  x = (x' - r) / a
            let mut inv: BTreeMap<usize, Rat> = BTreeMap::new();
            for (v, c) in &lin {
                if *v != x {
                    inv.insert(*v, -c.clone() / &a);
                }
            }
            inv.insert(x, Rat::one() / &a);
            let inv_c = -c0 / &a;
            let facts = ctx
                .facts()
                .iter()
                .map(|f| {
                    let k = match f.coeffs.get(&x) {
                        None => return f.clone(),
                        Some(k) => k.clone(),
                    };
                    let mut coeffs = f.coeffs.clone();
                    coeffs.remove(&x);
                    for (v, c) in &inv {
                        *coeffs.entry(*v).or_insert_with(Rat::zero) += &k * c;
                    }
                    self.ineq(coeffs, &f.constant + &k * &inv_c)
                })
                .collect();
            return self.make(facts);
        }
        let projected = self.project(ctx, x);
        let mut eq = lin.clone();
        eq.insert(x, -Rat::one());
        let neg: BTreeMap<usize, Rat> = eq.iter().map(|(v, c)| (*v, -c.clone())).collect();
        let mut facts = projected.facts().to_vec();
        if projected.is_bottom() {
            return projected;
        }
        facts.push(self.ineq(eq, c0.clone()));
        facts.push(self.ineq(neg, -c0));
        self.make(facts)
    }

    pub fn sample(&self, ctx: &LogicalContext, x: usize, d: &Dist) -> LogicalContext {
        let projected = self.project(ctx, x);
        if projected.is_bottom() {
            return projected;
        }
        let (lo, hi) = d.support();
        let mut facts = projected.facts().to_vec();
        facts.push(self.ineq(BTreeMap::from([(x, Rat::one())]), -lo));
        facts.push(self.ineq(BTreeMap::from([(x, -Rat::one())]), hi));
        self.make(facts)
    }

    pub fn meet(&self, a: &LogicalContext, b: &LogicalContext) -> LogicalContext {
        if a.is_bottom() || b.is_bottom() {
            return LogicalContext::Bottom;
        }
        let mut f = a.facts().to_vec();
        f.extend(b.facts().iter().cloned());
        self.make(f)
    }

    /// Largest constant-tight bound of a direction: `dir·x ≥ result`.
    fn min_dir(ctx: &[LinIneq], dir: &BTreeMap<usize, Rat>) -> ExtRat {
        if let Some(f) = ctx.iter().find(|f| f.coeffs == *dir) {
            // A syntactic fact already bounds the direction; refine by LP only
            // when other facts could matter.
            if ctx.len() == 1 {
                return ExtRat::Fin(-f.constant.clone());
            }
        }
        lp_min(ctx, dir, &Rat::zero())
    }

    pub fn join(&self, a: &LogicalContext, b: &LogicalContext) -> LogicalContext {
        let (fa, fb) = match (a, b) {
            (LogicalContext::Bottom, _) => return b.clone(),
            (_, LogicalContext::Bottom) => return a.clone(),
            (LogicalContext::Facts(fa), LogicalContext::Facts(fb)) => (fa, fb),
        };
        if fa.is_empty() || fb.is_empty() {
            return LogicalContext::top();
        }
        if fa == fb {
            return a.clone();
        }
        let mut dirs: BTreeSet<BTreeMap<usize, Rat>> = BTreeSet::new();
        for f in fa.iter().chain(fb.iter()) {
            dirs.insert(f.coeffs.clone());
        }
        let live: BTreeSet<usize> = fa.iter().chain(fb.iter()).flat_map(|f| f.vars()).collect();
        for t in &self.templates {
            if t.keys().all(|v| live.contains(v)) {
                dirs.insert(t.clone());
            }
        }
        let mut out = Vec::new();
        for d in dirs {
            let ma = Self::min_dir(fa, &d);
            if ma == ExtRat::NegInf {
                continue;
            }
            let mb = Self::min_dir(fb, &d);
            if mb == ExtRat::NegInf {
                continue;
            }
            let m = if ma < mb { ma } else { mb };
            if let ExtRat::Fin(v) = m {
                out.push(self.ineq(d, -v));
            }
        }
        self.make(out)
    }

    /// Keeps the facts of `old` that still hold in `new`.
    pub fn widen(&self, old: &LogicalContext, new: &LogicalContext) -> LogicalContext {
        let (fo, fnew) = match (old, new) {
            (LogicalContext::Bottom, _) => return new.clone(),
            (_, LogicalContext::Bottom) => return old.clone(),
            (LogicalContext::Facts(a), LogicalContext::Facts(b)) => (a, b),
        };
        let kept = fo.iter().filter(|f| entails_facts(fnew, f)).cloned().collect();
        self.make(kept)
    }

    /// `a ⊑ b`: every fact of `b` holds under `a`.
    pub fn leq(&self, a: &LogicalContext, b: &LogicalContext) -> bool {
        match (a, b) {
            (LogicalContext::Bottom, _) => true,
            (_, LogicalContext::Bottom) => false,
            (LogicalContext::Facts(fa), LogicalContext::Facts(fb)) => fb.iter().all(|f| entails_facts(fa, f)),
        }
    }
}

fn collect_atoms<'a>(c: &'a Cond, f: &mut dyn FnMut(&'a Expr, &'a Expr)) {
    match c {
        Cond::True => {}
        Cond::Not(x) => collect_atoms(x, f),
        Cond::And(a, b) => {
            collect_atoms(a, f);
            collect_atoms(b, f);
        }
        Cond::Le(a, b) => f(a, b),
    }
}

pub fn entails_facts(facts: &[LinIneq], goal: &LinIneq) -> bool {
    if facts.iter().any(|f| f.coeffs == goal.coeffs && f.constant <= goal.constant) {
        return true;
    }
    match lp_min(facts, &goal.coeffs, &goal.constant) {
        ExtRat::PosInf => true,
        ExtRat::Fin(v) => !v.is_negative(),
        ExtRat::NegInf => false,
    }
}

/// Γ ⊨ fact.
pub fn entails(ctx: &LogicalContext, goal: &LinIneq) -> bool {
    match ctx {
        LogicalContext::Bottom => true,
        LogicalContext::Facts(f) => entails_facts(f, goal),
    }
}

fn prune_redundant(mut facts: Vec<LinIneq>) -> Vec<LinIneq> {
    let mut i = 0;
    while i < facts.len() {
        let f = facts.remove(i);
        if entails_facts(&facts, &f) {
            continue;
        }
        facts.insert(i, f);
        i += 1;
    }
    facts
}

/// Contexts before and after every statement, plus function entry and exit.
#[derive(Clone, Debug, Default)]
pub struct ContextMap {
    pub pre: HashMap<Loc, LogicalContext>,
    pub post: HashMap<Loc, LogicalContext>,
    pub entry: HashMap<String, LogicalContext>,
    pub exit: HashMap<String, LogicalContext>,
}

impl ContextMap {
    pub fn pre_of(&self, l: Loc) -> LogicalContext {
        self.pre.get(&l).cloned().unwrap_or(LogicalContext::Bottom)
    }
    pub fn post_of(&self, l: Loc) -> LogicalContext {
        self.post.get(&l).cloned().unwrap_or(LogicalContext::Bottom)
    }
}

const WIDEN_AFTER: usize = 3;

struct Inference<'d, 'p> {
    dom: &'d Domain<'p>,
    locs: &'d Locations,
    map: ContextMap,
    /// Join of call-site contexts per callee, collected in the current round.
    pending: HashMap<String, LogicalContext>,
    modified: HashMap<String, BTreeSet<usize>>,
}

impl<'d, 'p> Inference<'d, 'p> {
    fn record(&mut self, s: &Stmt, pre: &LogicalContext, post: &LogicalContext) {
        let l = self.locs.of(s);
        self.map.pre.insert(l, pre.clone());
        self.map.post.insert(l, post.clone());
    }

    fn run(&mut self, s: &Stmt, ctx: &LogicalContext) -> LogicalContext {
        let dom = self.dom;
        let out = match s {
            Stmt::Skip | Stmt::Tick(_) => ctx.clone(),
            Stmt::Assign(x, e) => dom.assign(ctx, dom.prog.var_index(x).expect("declared"), e),
            Stmt::Sample(x, d) => dom.sample(ctx, dom.prog.var_index(x).expect("declared"), d),
            Stmt::Call(f) => {
                if !ctx.is_bottom() {
                    let cur = self.pending.remove(f).unwrap_or(LogicalContext::Bottom);
                    let j = dom.join(&cur, ctx);
                    self.pending.insert(f.clone(), j);
                }
                let havocked = dom.havoc(ctx, &self.modified[f]);
                let exit = self.map.exit.get(f).cloned().unwrap_or(LogicalContext::Bottom);
                dom.meet(&havocked, &exit)
            }
            Stmt::Seq(a, b) => {
                let mid = self.run(a, ctx);
                self.run(b, &mid)
            }
            Stmt::Prob(_, a, b) => {
                let x = self.run(a, ctx);
                let y = self.run(b, ctx);
                dom.join(&x, &y)
            }
            Stmt::If(c, a, b) => {
                let ca = dom.meet_cond(ctx, c, true);
                let cb = dom.meet_cond(ctx, c, false);
                let x = self.run(a, &ca);
                let y = self.run(b, &cb);
                dom.join(&x, &y)
            }
            Stmt::While(c, body) => {
                let mut inv = ctx.clone();
                let mut iter = 0;
                loop {
                    let inside = dom.meet_cond(&inv, c, true);
                    let after = self.run(body, &inside);
                    let next = dom.join(&inv, &after);
                    if dom.leq(&next, &inv) {
                        break;
                    }
                    iter += 1;
                    inv = if iter >= WIDEN_AFTER { dom.widen(&inv, &next) } else { next };
                }
                // Re-run once on the stable invariant so inner records match it.
                let inside = dom.meet_cond(&inv, c, true);
                self.run(body, &inside);
                let exit = dom.meet_cond(&inv, c, false);
                self.record(s, &inv, &exit);
                return exit;
            }
        };
        self.record(s, ctx, &out);
        out
    }
}

/// Forward interprocedural inference seeded by the program precondition.
pub fn infer_contexts(prog: &Program, locs: &Locations) -> ContextMap {
    let dom = Domain::new(prog);
    let modified = prog
        .decls
        .keys()
        .map(|f| {
            let m: BTreeSet<usize> = prog.modified_by(f).iter().filter_map(|v| prog.var_index(v)).collect();
            (f.clone(), m)
        })
        .collect();
    let mut inf = Inference { dom: &dom, locs, map: ContextMap::default(), pending: HashMap::new(), modified };
    let pre = dom.from_cond(&prog.pre);
    for f in prog.decls.keys() {
        inf.map.entry.insert(f.clone(), LogicalContext::Bottom);
        inf.map.exit.insert(f.clone(), LogicalContext::Bottom);
    }
    let mut round = 0;
    loop {
        inf.pending.clear();
        inf.run(&prog.main, &pre);
        let mut new_exit = HashMap::new();
        for (f, body) in &prog.decls {
            let entry = inf.map.entry[f].clone();
            let exit = inf.run(body, &entry);
            new_exit.insert(f.clone(), exit);
        }
        let mut changed = false;
        round += 1;
        for f in prog.decls.keys() {
            let called = inf.pending.get(f).cloned().unwrap_or(LogicalContext::Bottom);
            let old_entry = inf.map.entry[f].clone();
            let mut entry = dom.join(&old_entry, &called);
            if !dom.leq(&entry, &old_entry) {
                if round > WIDEN_AFTER {
                    entry = dom.widen(&old_entry, &entry);
                }
                inf.map.entry.insert(f.clone(), entry);
                changed = true;
            }
            let old_exit = inf.map.exit[f].clone();
            let mut exit = dom.join(&old_exit, &new_exit[f]);
            if !dom.leq(&exit, &old_exit) {
                if round > WIDEN_AFTER {
                    exit = dom.widen(&old_exit, &exit);
                }
                inf.map.exit.insert(f.clone(), exit);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    inf.map
}

impl fmt::Display for LinIneq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..=self.coeffs.keys().max().copied().unwrap_or(0)).map(|i| format!("v{i}")).collect();
        f.write_str(&self.render(&names))
    }
}
