//! Side conditions under which the inferred moment bounds are sound: a
//! finite moment of the step count, and bounded updates of every variable.

use crate::analysis::context::{linear_form, lp_min, LinIneq};
use crate::analysis::{
    analyze_with_contexts, expr_poly, infer_contexts, AnalysisConfig, AnalysisError, ContextMap, Locations, Mode,
};
use crate::lang::{expr_to_string, Program, Stmt};
use crate::lp::{build_objective, BoundSide, Prepared};
use crate::num::{ExtRat, Rat};
use crate::poly::RatPoly;
use num_traits::Zero;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq)]
pub enum TerminationVerdict {
    /// Upper bound on `E[T^k]` as a polynomial in the program variables.
    Pass { bound: RatPoly, at_gamma0: Rat },
    Fail { reason: String },
}

impl TerminationVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, TerminationVerdict::Pass { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum UpdateVerdict {
    Pass,
    Fail { location: String, witness: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SoundnessVerdict {
    pub termination: TerminationVerdict,
    pub bounded_update: UpdateVerdict,
    /// `m·d`, the step-count moment that must be finite.
    pub required_degree: usize,
}

impl SoundnessVerdict {
    pub fn passed(&self) -> bool {
        self.termination.passed() && self.bounded_update == UpdateVerdict::Pass
    }

    pub fn to_json(&self, names: &[String]) -> serde_json::Value {
        let termination = match &self.termination {
            TerminationVerdict::Pass { bound, at_gamma0 } => serde_json::json!({
                "status": "pass",
                "bound": bound.to_json(names),
                "bound_text": bound.render(names),
                "at_gamma0": crate::poly::rat_to_json(at_gamma0),
            }),
            TerminationVerdict::Fail { reason } => serde_json::json!({"status": "fail", "reason": reason}),
        };
        serde_json::json!({
            "sound": self.passed(),
            "termination": termination,
            "bounded_update": self.bounded_update,
            "required_degree": self.required_degree,
        })
    }
}

/// Bounds `E[T^k]` for the step count `T`, every statement costing one step.
/// Templates have degree `d` per moment order, so `k = m·d` is reached with
/// template degree 1 for the analyzed order `k`.
pub fn check_termination_moment(p: &Program, k: usize, gamma0: &[Rat]) -> Result<TerminationVerdict, AnalysisError> {
    let locs = Locations::new(p);
    let ctxs = infer_contexts(p, &locs);
    check_termination_with_contexts(p, k, gamma0, locs, ctxs)
}

pub fn check_termination_with_contexts(
    p: &Program,
    k: usize,
    gamma0: &[Rat],
    locs: Locations,
    ctxs: ContextMap,
) -> Result<TerminationVerdict, AnalysisError> {
    if k == 0 {
        return Ok(TerminationVerdict::Pass { bound: RatPoly::from_rat(Rat::from_integer(1.into())), at_gamma0: Rat::from_integer(1.into()) });
    }
    let cfg = AnalysisConfig { m: k, d: 1, mode: Mode::Termination };
    let der = analyze_with_contexts(p, cfg, locs, ctxs)?;
    let obj = build_objective(&der.root, gamma0, k, BoundSide::Upper);
    let mut prep = Prepared::new(&der.problem, std::slice::from_ref(&obj));
    let sol = prep.solve(0, BoundSide::Upper.sense());
    if !sol.is_optimal() {
        return Ok(TerminationVerdict::Fail { reason: format!("no step-count bound of order {k}: LP {}", sol.status) });
    }
    let vals = sol.values.clone();
    let inst = der.root.instantiate(&move |v| vals[v.0 as usize].clone());
    let bound = inst.comps[k].hi.clone();
    let at_gamma0 = sol.objective.unwrap_or_default();
    Ok(TerminationVerdict::Pass { bound, at_gamma0 })
}

fn bounded(facts: &[LinIneq], dir: &BTreeMap<usize, Rat>, c: &Rat) -> bool {
    let dir: BTreeMap<usize, Rat> = dir.iter().filter(|(_, a)| !a.is_zero()).map(|(v, a)| (*v, a.clone())).collect();
    if dir.is_empty() {
        return true;
    }
    let neg: BTreeMap<usize, Rat> = dir.iter().map(|(v, a)| (*v, -a.clone())).collect();
    let finite = |r: ExtRat| !matches!(r, ExtRat::NegInf);
    finite(lp_min(facts, &dir, c)) && finite(lp_min(facts, &neg, &-c.clone()))
}

/// Every assignment changes its target by a bounded amount under the
/// context at its location, and every sampled distribution is bounded.
pub fn check_bounded_update(p: &Program, locs: &Locations, ctxs: &ContextMap) -> UpdateVerdict {
    let mut bodies: Vec<(&str, &Stmt)> = vec![("main", &p.main)];
    bodies.extend(p.decls.iter().map(|(f, b)| (f.as_str(), b)));
    let written: BTreeSet<usize> =
        bodies.iter().flat_map(|(_, b)| b.written_vars()).filter_map(|x| p.var_index(&x)).collect();
    for (fname, body) in bodies {
        let mut verdict = UpdateVerdict::Pass;
        body.visit(&mut |s| {
            if verdict != UpdateVerdict::Pass {
                return;
            }
            let Stmt::Assign(x, e) = s else { return };
            let l = locs.of(s);
            let ctx = ctxs.pre_of(l);
            if ctx.is_bottom() {
                return;
            }
            let xi = p.var_index(x).expect("declared variable");
            let location = format!("{fname}:{}", l.idx);
            let fail = |why: &str| UpdateVerdict::Fail {
                location: location.clone(),
                witness: format!("{} - {x} {why}", expr_to_string(e)),
            };
            let Some((dir, c)) = linear_form(p, e) else {
                let diff = expr_poly(p, e).sub(&RatPoly::var(xi));
                if diff.degree() == 0 {
                    return;
                }
                verdict = fail("is nonlinear and unbounded");
                return;
            };
            // Variables no statement writes keep their initial value, so they
            // are constants of a single run.
            let dir: BTreeMap<usize, Rat> = dir.into_iter().filter(|(v, _)| written.contains(v)).collect();
            // A reset to a bounded value is as good as a bounded change.
            if bounded(ctx.facts(), &dir, &c) {
                return;
            }
            let mut delta = dir;
            *delta.entry(xi).or_insert_with(Rat::zero) -= Rat::from_integer(1.into());
            if !bounded(ctx.facts(), &delta, &c) {
                verdict = fail("is unbounded");
            }
        });
        if verdict != UpdateVerdict::Pass {
            return verdict;
        }
    }
    UpdateVerdict::Pass
}

/// Runs both checks for moment order `m` and template degree `d`.
pub fn check_soundness(p: &Program, m: usize, d: u32, gamma0: &[Rat]) -> Result<SoundnessVerdict, AnalysisError> {
    let locs = Locations::new(p);
    let ctxs = infer_contexts(p, &locs);
    let bounded_update = check_bounded_update(p, &locs, &ctxs);
    let k = m * d as usize;
    let termination = check_termination_with_contexts(p, k, gamma0, locs, ctxs)?;
    Ok(SoundnessVerdict { termination, bounded_update, required_degree: k })
}
