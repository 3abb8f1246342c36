//! Backward derivation: turns a program into a linear constraint system over
//! template coefficients whose solutions are valid interval moment bounds.

use super::context::{entails, infer_contexts, ContextMap, LinIneq, LogicalContext};
use super::live::{liveness, Liveness, VarSet};
use super::locs::{Loc, Locations};
use crate::lang::{Expr, Program, Stmt};
use crate::lp::{LpProblem, Relation, VarKind, VarPool};
use crate::num::Rat;
use crate::poly::{
    dist_raw_moments, fresh_annotation, AffineForm, Monomial, PolyError, RatAnnotation, RatPoly, Side, SymAnnotation,
    SymPoly, TemplateShape,
};
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("at {location}: {source}")]
    Poly { location: String, source: PolyError },
    #[error("call to unknown function `{0}`")]
    UnknownFunction(String),
}

/// What the derivation bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Interval bounds on the raw moments of the accumulated cost.
    Moments,
    /// Upper bounds on the moments of the step count: every statement costs
    /// one step, tick amounts are ignored and lower endpoints are not tracked.
    Termination,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnalysisConfig {
    pub m: usize,
    pub d: u32,
    pub mode: Mode,
}

impl AnalysisConfig {
    pub fn moments(m: usize, d: u32) -> Self {
        AnalysisConfig { m, d, mode: Mode::Moments }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemplateKind {
    SpecPre,
    SpecPost,
    Loop,
    Join,
}

/// A template annotation and where it was allocated.
#[derive(Clone, Debug)]
pub struct TemplateInfo {
    pub kind: TemplateKind,
    /// Function whose body (or spec) the template belongs to.
    pub func: String,
    pub h: usize,
    /// Spec instance the template belongs to; `None` for `main`.
    pub instance: Option<usize>,
    /// Statement location for loop and join templates.
    pub loc: Option<Loc>,
    pub annotation: SymAnnotation,
}

/// A function specification `{pre} f {post}` at restriction level `h`,
/// instantiated for one call site.
#[derive(Clone, Debug)]
pub struct SpecInstance {
    pub func: String,
    pub h: usize,
    pub site: Loc,
    pub pre: SymAnnotation,
    pub post: SymAnnotation,
}

/// The closed constraint system of one program.
pub struct Derivation {
    pub config: AnalysisConfig,
    /// Constraints over template coefficients and weakening slacks; the
    /// objective is left for the caller.
    pub problem: LpProblem,
    /// Pre-annotation of `main` against the post `1̲`.
    pub root: SymAnnotation,
    pub instances: Vec<SpecInstance>,
    pub templates: Vec<TemplateInfo>,
    pub contexts: ContextMap,
    pub var_names: Vec<String>,
}

impl Derivation {
    /// Adds equalities fixing a template to concrete polynomials.
    pub fn pin(&mut self, sym: &SymAnnotation, val: &RatAnnotation, tag: &str) {
        let fixed = SymAnnotation::from_rat(val);
        for (a, b) in sym.comps.iter().zip(&fixed.comps) {
            equate(&mut self.problem, &a.lo, &b.lo, tag);
            equate(&mut self.problem, &a.hi, &b.hi, tag);
        }
    }
}

/// Emits `a = b` coefficientwise.
fn equate(p: &mut LpProblem, a: &SymPoly, b: &SymPoly, tag: &str) {
    let diff = a.sub(b);
    for (_, c) in diff.terms() {
        if c.is_zero() {
            continue;
        }
        p.add(c.clone(), Relation::Eq, tag);
    }
}

pub fn expr_poly(p: &Program, e: &Expr) -> RatPoly {
    match e {
        Expr::Var(x) => RatPoly::var(p.var_index(x).expect("declared variable")),
        Expr::Const(c) => RatPoly::from_rat(c.clone()),
        Expr::Add(a, b) => expr_poly(p, a).add(&expr_poly(p, b)),
        Expr::Mul(a, b) => expr_poly(p, a).mul(&expr_poly(p, b)),
    }
}

/// Certificate generators for one weakening: conical ones (nonnegative
/// under the context) and free-sign ones (multiples of equalities).
struct Generators {
    conic: Vec<RatPoly>,
    free: Vec<RatPoly>,
}

fn fact_poly(f: &LinIneq) -> RatPoly {
    let mut p = RatPoly::from_rat(f.constant.clone());
    for (v, c) in &f.coeffs {
        p.add_term(Monomial::var(*v), c);
    }
    p
}

type GenKey = (Vec<LinIneq>, Vec<usize>, u32);

struct Engine<'p> {
    prog: &'p Program,
    cfg: AnalysisConfig,
    locs: Locations,
    ctxs: ContextMap,
    live: Liveness,
    problem: LpProblem,
    instances: Vec<SpecInstance>,
    by_key: HashMap<(String, usize, Loc), usize>,
    worklist: VecDeque<usize>,
    templates: Vec<TemplateInfo>,
    weakenings: usize,
    gen_cache: HashMap<GenKey, Rc<Generators>>,
}

fn side_char(s: Side) -> char {
    match s {
        Side::Lo => 'L',
        Side::Hi => 'U',
    }
}

impl<'p> Engine<'p> {
    fn upper_only(&self) -> bool {
        self.cfg.mode == Mode::Termination
    }

    fn shape(&self, h: usize) -> TemplateShape {
        TemplateShape { m: self.cfg.m, d: self.cfg.d, h, unit_zeroth: h == 0, upper_only: self.upper_only() }
    }

    fn loc_name(&self, l: Loc) -> String {
        format!("{}_{}", self.locs.names[l.func], l.idx)
    }

    fn template(&mut self, prefix: &str, h: usize, vars: &VarSet) -> SymAnnotation {
        let vars: Vec<usize> = vars.iter().copied().collect();
        let shape = self.shape(h);
        let names = &self.prog.vars;
        let pool: &mut VarPool = &mut self.problem.vars;
        fresh_annotation(shape, &vars, &mut |k, side, mono| {
            pool.fresh(format!("q_{prefix}_{k}{}_{}", side_char(side), mono.ident(names)), VarKind::Free)
        })
    }

    fn func_name(&self, inst: Option<usize>) -> String {
        match inst {
            Some(i) => self.instances[i].func.clone(),
            None => "main".into(),
        }
    }

    fn prefix(&self, inst: Option<usize>, l: Loc) -> String {
        match inst {
            Some(i) => format!("i{i}_{}", self.loc_name(l)),
            None => self.loc_name(l),
        }
    }

    fn instance(&mut self, f: &str, h: usize, site: Loc) -> usize {
        let key = (f.to_string(), h, site);
        if let Some(i) = self.by_key.get(&key) {
            return *i;
        }
        let id = self.instances.len();
        let base = format!("{f}_h{h}_{}", self.loc_name(site));
        let pre_vars = self.live.entry.get(f).cloned().unwrap_or_default();
        let post_vars = self.live.exit.get(f).cloned().unwrap_or_default();
        let pre = self.template(&format!("{base}_pre"), h, &pre_vars);
        let post = self.template(&format!("{base}_post"), h, &post_vars);
        if self.upper_only() {
            let entry = self.ctxs.entry.get(f).cloned().unwrap_or(LogicalContext::Bottom);
            let exit = self.ctxs.exit.get(f).cloned().unwrap_or(LogicalContext::Bottom);
            self.certify_nonneg(&entry, &pre, &format!("nonneg:spec-pre@{base}"));
            self.certify_nonneg(&exit, &post, &format!("nonneg:spec-post@{base}"));
        }
        for (kind, a) in [(TemplateKind::SpecPre, &pre), (TemplateKind::SpecPost, &post)] {
            self.templates.push(TemplateInfo {
                kind,
                func: f.to_string(),
                h,
                instance: Some(id),
                loc: None,
                annotation: a.clone(),
            });
        }
        self.instances.push(SpecInstance { func: f.to_string(), h, site, pre, post });
        self.by_key.insert(key, id);
        self.worklist.push_back(id);
        id
    }

    fn generators(&mut self, ctx: &[LinIneq], vars: &BTreeSet<usize>, cap: u32) -> Rc<Generators> {
        let facts: Vec<LinIneq> = ctx.iter().filter(|f| f.vars().all(|v| vars.contains(&v))).cloned().collect();
        let var_list: Vec<usize> = vars.iter().copied().collect();
        let key = (facts.clone(), var_list.clone(), cap);
        if let Some(g) = self.gen_cache.get(&key) {
            return g.clone();
        }
        // Split equalities (a fact together with its negation) from inequalities.
        let mut ineqs: Vec<RatPoly> = Vec::new();
        let mut eqs: Vec<RatPoly> = Vec::new();
        for (i, f) in facts.iter().enumerate() {
            let neg = f.negated_form();
            match facts.iter().position(|g| *g == neg) {
                Some(j) if j > i => eqs.push(fact_poly(f)),
                Some(_) => {}
                None => ineqs.push(fact_poly(f)),
            }
        }
        let full = LogicalContext::Facts(facts.clone());
        let nonneg: BTreeSet<usize> = var_list
            .iter()
            .copied()
            .filter(|v| entails(&full, &LinIneq { coeffs: BTreeMap::from([(*v, Rat::one())]), constant: Rat::zero() }))
            .collect();
        let pads: Vec<Monomial> = Monomial::all_up_to(&var_list, cap)
            .into_iter()
            .filter(|m| m.factors().all(|(v, e)| e % 2 == 0 || nonneg.contains(&v)))
            .collect();
        let mut bases: Vec<RatPoly> = vec![RatPoly::from_rat(Rat::one())];
        if cap >= 1 {
            bases.extend(ineqs.iter().cloned());
        }
        if cap >= 2 {
            for i in 0..ineqs.len() {
                for j in i..ineqs.len() {
                    bases.push(ineqs[i].mul(&ineqs[j]));
                }
            }
        }
        let mut seen: BTreeSet<Vec<(Monomial, Rat)>> = BTreeSet::new();
        let mut conic = Vec::new();
        for b in &bases {
            let db = b.degree();
            for u in &pads {
                if u.degree() + db > cap {
                    continue;
                }
                let g = b.mul(&RatPoly::monomial(u.clone(), Rat::one()));
                let sig: Vec<(Monomial, Rat)> = g.terms().map(|(m, c)| (m.clone(), c.clone())).collect();
                if seen.insert(sig) {
                    conic.push(g);
                }
            }
        }
        let mut free = Vec::new();
        if cap >= 1 {
            for e in &eqs {
                for u in Monomial::all_up_to(&var_list, cap - 1) {
                    free.push(e.mul(&RatPoly::monomial(u, Rat::one())));
                }
            }
        }
        let g = Rc::new(Generators { conic, free });
        self.gen_cache.insert(key, g.clone());
        g
    }

    /// Emits `diff = Σ λ_g g + Σ μ_e e` with `λ ≥ 0`, certifying `diff ≥ 0`
    /// under the context.
    fn emit_conic(&mut self, ctx: &LogicalContext, diff: &SymPoly, cap: u32, label: &str, tag: &str) {
        let facts = match ctx {
            LogicalContext::Bottom => return,
            LogicalContext::Facts(f) => f.clone(),
        };
        if diff.terms().all(|(_, c)| c.is_zero()) {
            return;
        }
        let vars = diff.vars();
        let gens = self.generators(&facts, &vars, cap);
        let mut rows: BTreeMap<Monomial, AffineForm> = BTreeMap::new();
        for (m, c) in diff.terms() {
            rows.insert(m.clone(), c.clone());
        }
        let n = self.weakenings;
        for (i, g) in gens.conic.iter().enumerate() {
            let w = self.problem.vars.fresh(format!("w{n}_{label}_{i}"), VarKind::Nonneg);
            for (m, c) in g.terms() {
                rows.entry(m.clone()).or_default().add_term(w, &-c.clone());
            }
        }
        for (i, g) in gens.free.iter().enumerate() {
            let w = self.problem.vars.fresh(format!("e{n}_{label}_{i}"), VarKind::Free);
            for (m, c) in g.terms() {
                rows.entry(m.clone()).or_default().add_term(w, &-c.clone());
            }
        }
        for (_, e) in rows {
            if !e.is_zero() {
                self.problem.add(e, Relation::Eq, tag);
            }
        }
    }

    /// `Γ ⊨ from ⊒ to`: `from.lo ≤ to.lo` and `from.hi ≥ to.hi` componentwise.
    fn weaken(&mut self, ctx: &LogicalContext, from: &SymAnnotation, to: &SymAnnotation, tag: &str) {
        if ctx.is_bottom() {
            return;
        }
        self.weakenings += 1;
        for k in 0..=self.cfg.m {
            let cap = k as u32 * self.cfg.d;
            if !self.upper_only() {
                let diff = to.comps[k].lo.sub(&from.comps[k].lo);
                self.emit_conic(ctx, &diff, cap, &format!("{k}L"), tag);
            }
            let diff = from.comps[k].hi.sub(&to.comps[k].hi);
            self.emit_conic(ctx, &diff, cap, &format!("{k}U"), tag);
        }
    }

    fn certify_nonneg(&mut self, ctx: &LogicalContext, a: &SymAnnotation, tag: &str) {
        if ctx.is_bottom() {
            return;
        }
        self.weakenings += 1;
        for k in 1..=self.cfg.m {
            let cap = k as u32 * self.cfg.d;
            let hi = a.comps[k].hi.clone();
            self.emit_conic(ctx, &hi, cap, &format!("{k}N"), tag);
        }
    }

    fn check_caps(&self, a: &SymAnnotation, l: Loc) -> Result<(), AnalysisError> {
        for (k, c) in a.comps.iter().enumerate() {
            let cap = k as u32 * self.cfg.d;
            for p in [&c.lo, &c.hi] {
                p.check_degree(cap, &self.prog.vars)
                    .map_err(|source| AnalysisError::Poly { location: self.loc_name(l), source })?;
            }
        }
        Ok(())
    }

    fn step(&self, a: SymAnnotation) -> SymAnnotation {
        match self.cfg.mode {
            Mode::Moments => a,
            Mode::Termination => a.tick(&Rat::one()),
        }
    }

    fn transfer(
        &mut self,
        s: &Stmt,
        post: SymAnnotation,
        h: usize,
        inst: Option<usize>,
    ) -> Result<SymAnnotation, AnalysisError> {
        if let Stmt::Seq(a, b) = s {
            let mid = self.transfer(b, post, h, inst)?;
            return self.transfer(a, mid, h, inst);
        }
        let l = self.locs.of(s);
        if self.ctxs.pre_of(l).is_bottom() {
            return Ok(post);
        }
        let pre = match s {
            Stmt::Seq(..) => unreachable!("handled above"),
            Stmt::Skip => post,
            Stmt::Tick(c) => match self.cfg.mode {
                Mode::Moments => post.tick(c),
                Mode::Termination => post,
            },
            Stmt::Assign(x, e) => {
                let xi = self.prog.var_index(x).expect("declared variable");
                let ep = expr_poly(self.prog, e);
                let r = post.map(|p| p.subst(xi, &ep));
                self.check_caps(&r, l)?;
                r
            }
            Stmt::Sample(x, dist) => {
                let xi = self.prog.var_index(x).expect("declared variable");
                let moments = dist_raw_moments(dist, self.cfg.m as u32 * self.cfg.d);
                post.try_map(|p| p.expect(xi, &moments))
                    .map_err(|source| AnalysisError::Poly { location: self.loc_name(l), source })?
            }
            Stmt::Prob(p, a, b) => {
                let pa = self.transfer(a, post.clone(), h, inst)?;
                let pb = self.transfer(b, post, h, inst)?;
                pa.scale(p).combine(&pb.scale(&(Rat::one() - p)))
            }
            Stmt::If(_, a, b) => {
                let ca = self.ctxs.pre_of(self.locs.of(a));
                let cb = self.ctxs.pre_of(self.locs.of(b));
                let pa = self.transfer(a, post.clone(), h, inst)?;
                let pb = self.transfer(b, post, h, inst)?;
                if ca.is_bottom() {
                    pb
                } else if cb.is_bottom() || pa == pb {
                    pa
                } else {
                    let vars = self.live.at(l);
                    let j = self.template(&self.prefix(inst, l), h, &vars);
                    self.record(TemplateKind::Join, inst, h, l, &j);
                    let tag = self.loc_name(l);
                    if self.upper_only() {
                        let ctx = self.ctxs.pre_of(l);
                        self.certify_nonneg(&ctx, &j, &format!("nonneg:cond@{tag}"));
                    }
                    self.weaken(&ca, &j, &pa, &format!("weaken:cond-then@{tag}"));
                    self.weaken(&cb, &j, &pb, &format!("weaken:cond-else@{tag}"));
                    j
                }
            }
            Stmt::While(_, body) => {
                let vars = self.live.at(l);
                let q = self.template(&self.prefix(inst, l), h, &vars);
                self.record(TemplateKind::Loop, inst, h, l, &q);
                let tag = self.loc_name(l);
                let head = self.ctxs.pre_of(l);
                if self.upper_only() {
                    self.certify_nonneg(&head, &q, &format!("nonneg:loop@{tag}"));
                }
                let exit = self.ctxs.post_of(l);
                let after = self.step(post);
                self.weaken(&exit, &q, &after, &format!("weaken:loop-exit@{tag}"));
                let p = self.transfer(body, q.clone(), h, inst)?;
                let p = self.step(p);
                let eq_tag = format!("loop-invariant@{tag}");
                let upper_only = self.upper_only();
                for (a, b) in p.comps.iter().zip(&q.comps) {
                    if !upper_only {
                        equate(&mut self.problem, &a.lo, &b.lo, &eq_tag);
                    }
                    equate(&mut self.problem, &a.hi, &b.hi, &eq_tag);
                }
                // The guard evaluation is already counted on both edges.
                return Ok(q);
            }
            Stmt::Call(f) => {
                if !self.prog.decls.contains_key(f) {
                    return Err(AnalysisError::UnknownFunction(f.clone()));
                }
                let after = self.ctxs.post_of(l);
                let tag = format!("weaken:call@{}", self.loc_name(l));
                let needs_frame = h < self.cfg.m && post.comps[h + 1..].iter().any(|c| !c.lo.is_zero() || !c.hi.is_zero());
                let i = self.instance(f, h, l);
                if needs_frame {
                    let fr = self.instance(f, h + 1, l);
                    let spec_post = self.instances[i].post.combine(&self.instances[fr].post);
                    self.weaken(&after, &spec_post, &post, &tag);
                    self.instances[i].pre.combine(&self.instances[fr].pre)
                } else {
                    let spec_post = self.instances[i].post.clone();
                    self.weaken(&after, &spec_post, &post, &tag);
                    self.instances[i].pre.clone()
                }
            }
        };
        Ok(self.step(pre))
    }

    fn record(&mut self, kind: TemplateKind, inst: Option<usize>, h: usize, l: Loc, a: &SymAnnotation) {
        let func = self.func_name(inst);
        self.templates.push(TemplateInfo { kind, func, h, instance: inst, loc: Some(l), annotation: a.clone() });
    }
}

/// Generates the constraint system for `p` at moment order `m` and template
/// degree `d`, with contexts inferred from the program precondition.
pub fn analyze_program(p: &Program, cfg: AnalysisConfig) -> Result<Derivation, AnalysisError> {
    let locs = Locations::new(p);
    let ctxs = infer_contexts(p, &locs);
    analyze_with_contexts(p, cfg, locs, ctxs)
}

pub fn analyze_with_contexts(
    p: &Program,
    cfg: AnalysisConfig,
    locs: Locations,
    ctxs: ContextMap,
) -> Result<Derivation, AnalysisError> {
    let live = liveness(p, &locs);
    let mut eng = Engine {
        prog: p,
        cfg,
        locs,
        ctxs,
        live,
        problem: LpProblem::new(VarPool::new()),
        instances: Vec::new(),
        by_key: HashMap::new(),
        worklist: VecDeque::new(),
        templates: Vec::new(),
        weakenings: 0,
        gen_cache: HashMap::new(),
    };
    let root = eng.transfer(&p.main, SymAnnotation::one(cfg.m), 0, None)?;
    while let Some(i) = eng.worklist.pop_front() {
        let (f, h, post, pre) = {
            let s = &eng.instances[i];
            (s.func.clone(), s.h, s.post.clone(), s.pre.clone())
        };
        let body = p.decls.get(&f).ok_or_else(|| AnalysisError::UnknownFunction(f.clone()))?;
        let got = eng.transfer(body, post, h, Some(i))?;
        let entry = eng.ctxs.entry.get(&f).cloned().unwrap_or(LogicalContext::Bottom);
        let tag = format!("weaken:spec-entry@{f}_h{h}_i{i}");
        eng.weaken(&entry, &pre, &got, &tag);
    }
    Ok(Derivation {
        config: cfg,
        problem: eng.problem,
        root,
        instances: eng.instances,
        templates: eng.templates,
        contexts: eng.ctxs,
        var_names: p.vars.clone(),
    })
}
