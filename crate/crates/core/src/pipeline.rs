//! End-to-end analysis of one program: parse, validate, infer contexts,
//! derive constraints, solve each endpoint, check soundness, post-process.

use crate::analysis::{analyze_with_contexts, infer_contexts, AnalysisConfig, AnalysisError, Derivation, Locations};
use crate::lang::{parse_program, validate, Diagnostic, ParseError, Program};
use crate::lp::{build_objective, BoundSide, LpStatus, Prepared, Relation, Sense, VarKind, VarPool};
use crate::num::{parse_rat, Rat};
use crate::poly::{AffineForm, LpVar, RatPoly};
use crate::postproc::{central_upper, CentralBound, MomentBounds};
use crate::report::{AnalysisReport, LpStats, MomentRow};
use crate::soundness::check_soundness;
use num_traits::{One, Zero};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("parse: {0}")]
    Parse(#[from] ParseError),
    #[error("validate: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Validate(Vec<Diagnostic>),
    #[error("analyze: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("eval: {0}")]
    Eval(String),
}

#[derive(Clone, Debug)]
pub struct AnalyzeOptions {
    pub m: usize,
    pub d: u32,
    /// Objective valuation; variables not listed are zero. When absent a
    /// point satisfying the precondition is chosen.
    pub eval: Option<Vec<(String, Rat)>>,
    /// Maximize `L₁` first, then minimize the higher upper endpoints with
    /// `L₁(γ₀)` held at its optimum.
    pub two_phase: bool,
    pub check_soundness: bool,
}

impl AnalyzeOptions {
    pub fn new(m: usize, d: u32) -> Self {
        AnalyzeOptions { m, d, eval: None, two_phase: false, check_soundness: true }
    }
    pub fn eval(mut self, pairs: &[(&str, i64)]) -> Self {
        self.eval = Some(pairs.iter().map(|(k, v)| (k.to_string(), Rat::from_integer((*v).into()))).collect());
        self
    }
}

/// Parses `k=v,k=v` with rational values.
pub fn parse_eval(text: &str) -> Result<Vec<(String, Rat)>, PipelineError> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| PipelineError::Eval(format!("expected k=v, got `{part}`")))?;
        let v = parse_rat(v.trim()).ok_or_else(|| PipelineError::Eval(format!("bad number `{}`", v.trim())))?;
        out.push((k.trim().to_string(), v));
    }
    Ok(out)
}

pub fn load_program(text: &str) -> Result<Program, PipelineError> {
    let p = parse_program(text)?;
    let diags = validate(&p);
    if !diags.is_empty() {
        return Err(PipelineError::Validate(diags));
    }
    Ok(p)
}

/// A valuation satisfying the precondition, found by maximizing the minimum
/// slack of its linear facts. Unconstrained variables are zero.
pub fn find_gamma0(p: &Program) -> Vec<Rat> {
    let zeros = vec![Rat::zero(); p.vars.len()];
    let dom = crate::analysis::Domain::new(p);
    let ctx = dom.from_cond(&p.pre);
    let facts = ctx.facts();
    if p.pre.eval(&|v| zeros[p.var_index(v).unwrap_or(0)].clone()) || facts.is_empty() {
        return zeros;
    }
    let mut pool = VarPool::new();
    let vars: Vec<LpVar> = p.vars.iter().map(|n| pool.fresh(n.clone(), VarKind::Free)).collect();
    let t = pool.fresh("slack", VarKind::Free);
    let mut lp = crate::lp::LpProblem::new(pool);
    for f in facts {
        let mut e = AffineForm::constant(f.constant.clone());
        for (v, a) in &f.coeffs {
            e.add_term(vars[*v], a);
        }
        e.add_term(t, &-Rat::one());
        lp.add(e, Relation::Ge, "pre");
    }
    // A vertex on the boundary keeps the valuation small; strict guards
    // closed to non-strict ones may need unit slack instead.
    for cap in [Rat::zero(), Rat::one()] {
        let mut lp = lp.clone();
        lp.add(AffineForm::var(t).sub(&AffineForm::constant(cap)), Relation::Le, "cap");
        let lp = lp.with_objective(AffineForm::var(t), Sense::Maximize);
        let sol = crate::lp::solve_exact(&lp);
        if !sol.is_optimal() {
            continue;
        }
        let mut g: Vec<Rat> = vars.iter().map(|v| sol.value(*v)).collect();
        for (i, name) in p.vars.iter().enumerate() {
            if p.ints.contains(name) {
                g[i] = crate::num::ceil(&g[i]);
            }
        }
        if p.pre.eval(&|v| g[p.var_index(v).unwrap_or(0)].clone()) {
            return g;
        }
    }
    zeros
}

fn valuation_of(p: &Program, eval: &Option<Vec<(String, Rat)>>) -> Result<Vec<Rat>, PipelineError> {
    match eval {
        Some(pairs) => {
            for (k, _) in pairs {
                if p.var_index(k).is_none() {
                    return Err(PipelineError::Eval(format!("unknown variable `{k}`")));
                }
            }
            Ok(crate::interp::valuation(p, pairs))
        }
        None => Ok(find_gamma0(p)),
    }
}

/// A derivation together with the valuation it is solved at.
pub struct DerivedProblem {
    pub derivation: Derivation,
    pub gamma0: Vec<Rat>,
    pub gen_seconds: f64,
}

pub fn derive(p: &Program, opts: &AnalyzeOptions) -> Result<DerivedProblem, PipelineError> {
    let gamma0 = valuation_of(p, &opts.eval)?;
    let start = Instant::now();
    let locs = Locations::new(p);
    let ctxs = infer_contexts(p, &locs);
    let derivation = analyze_with_contexts(p, AnalysisConfig::moments(opts.m, opts.d), locs, ctxs)?;
    Ok(DerivedProblem { derivation, gamma0, gen_seconds: start.elapsed().as_secs_f64() })
}

/// The LP problem with the upper bound on the `m`-th moment at `γ₀` as its
/// objective, ready for export.
pub fn export_problem(p: &Program, opts: &AnalyzeOptions) -> Result<crate::lp::LpProblem, PipelineError> {
    let prep = derive(p, opts)?;
    let der = prep.derivation;
    let obj = build_objective(&der.root, &prep.gamma0, opts.m, BoundSide::Upper);
    Ok(der.problem.with_objective(obj, Sense::Minimize))
}

/// Solves every endpoint of moments `1..=m`.
pub fn solve_bounds(der: &Derivation, gamma0: &[Rat], two_phase: bool) -> (Vec<MomentRow>, LpStats) {
    let m = der.config.m;
    let start = Instant::now();
    let mut objs = Vec::new();
    for k in 1..=m {
        objs.push(build_objective(&der.root, gamma0, k, BoundSide::Upper));
        objs.push(build_objective(&der.root, gamma0, k, BoundSide::Lower));
    }
    let mut rows: Vec<MomentRow> = (1..=m).map(MomentRow::empty).collect();
    let fill = |row: &mut MomentRow, side: BoundSide, sol: &crate::lp::LpSolution| {
        if !sol.is_optimal() {
            let note = match sol.status {
                LpStatus::Infeasible | LpStatus::Unbounded => "no bound at this template degree".to_string(),
                s => format!("solver: {s}"),
            };
            match side {
                BoundSide::Upper => row.hi_note = Some(note),
                BoundSide::Lower => row.lo_note = Some(note),
            }
            return;
        }
        let vals = sol.values.clone();
        let inst = der.root.instantiate(&move |v| vals[v.0 as usize].clone());
        let k = row.k;
        let value = sol.objective.clone().unwrap_or_default();
        match side {
            BoundSide::Upper => {
                row.hi = Some(inst.comps[k].hi.clone());
                row.hi_val = Some(value);
                row.hi_exact = sol.exact;
            }
            BoundSide::Lower => {
                row.lo = Some(inst.comps[k].lo.clone());
                row.lo_val = Some(value);
                row.lo_exact = sol.exact;
            }
        }
    };
    let mut prep = Prepared::new(&der.problem, &objs);
    for k in 1..=m {
        for (j, side) in [BoundSide::Upper, BoundSide::Lower].into_iter().enumerate() {
            let sol = prep.solve(2 * (k - 1) + j, side.sense());
            fill(&mut rows[k - 1], side, &sol);
        }
    }
    if two_phase && m >= 2 {
        if let Some(l1) = rows[0].lo_val.clone() {
            let mut fixed = der.problem.clone();
            fixed.add(objs[1].sub(&AffineForm::constant(l1)), Relation::Ge, "two-phase:lower-mean");
            let mut prep = Prepared::new(&fixed, &objs);
            for k in 2..=m {
                let sol = prep.solve(2 * (k - 1), Sense::Minimize);
                fill(&mut rows[k - 1], BoundSide::Upper, &sol);
            }
        }
    }
    let stats = LpStats {
        vars: der.problem.vars.len(),
        constraints: der.problem.constraints.len(),
        reduced: prep.reduced_size(),
        gen_seconds: 0.0,
        solve_seconds: start.elapsed().as_secs_f64(),
    };
    (rows, stats)
}

/// Moment bounds for the longest prefix of orders with both endpoints.
pub fn moment_bounds(rows: &[MomentRow], gamma0: &[Rat]) -> Option<MomentBounds> {
    let one = RatPoly::from_rat(Rat::one());
    let mut lo = vec![one.clone()];
    let mut hi = vec![one];
    for r in rows {
        match (&r.lo, &r.hi) {
            (Some(l), Some(h)) => {
                lo.push(l.clone());
                hi.push(h.clone());
            }
            _ => break,
        }
    }
    if lo.len() < 2 {
        return None;
    }
    Some(MomentBounds::new(lo, hi, gamma0.to_vec()))
}

pub fn central_bounds(b: &MomentBounds) -> Vec<CentralBound> {
    (2..=b.m().min(4)).filter_map(|k| central_upper(b, k).ok()).collect()
}

/// Runs the whole pipeline on a parsed program.
pub fn run_analyze(p: &Program, name: &str, opts: &AnalyzeOptions) -> Result<AnalysisReport, PipelineError> {
    let prep = derive(p, opts)?;
    let (rows, mut lp) = solve_bounds(&prep.derivation, &prep.gamma0, opts.two_phase);
    lp.gen_seconds = prep.gen_seconds;
    let bounds = moment_bounds(&rows, &prep.gamma0);
    let central = bounds.as_ref().map(central_bounds).unwrap_or_default();
    let soundness = if opts.check_soundness {
        Some(check_soundness(p, opts.m, opts.d, &prep.gamma0)?)
    } else {
        None
    };
    Ok(AnalysisReport {
        program: name.to_string(),
        m: opts.m,
        d: opts.d,
        var_names: p.vars.clone(),
        gamma0: prep.gamma0,
        rows,
        central,
        soundness,
        lp,
        nonneg_cost: !p.has_negative_tick(),
        simulation: None,
    })
}

/// Parses, validates and analyzes program text.
pub fn analyze_source(text: &str, name: &str, opts: &AnalyzeOptions) -> Result<AnalysisReport, PipelineError> {
    let p = load_program(text)?;
    run_analyze(&p, name, opts)
}
