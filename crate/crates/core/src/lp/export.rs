use super::model::{LpProblem, Relation, Sense, VarKind};
use crate::num::{to_f64, Rat};
use crate::poly::AffineForm;
use num_traits::{Signed, Zero};
use std::fmt::Write;

fn number(c: &Rat) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}", to_f64(c))
    }
}

fn linear(e: &AffineForm, p: &LpProblem) -> String {
    if e.terms.is_empty() {
        return "0 dummy_zero".into();
    }
    let mut out = String::new();
    for (i, (v, c)) in e.terms.iter().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if i == 0 {
            if neg {
                out.push_str("- ");
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if a != Rat::from_integer(1.into()) {
            out.push_str(&number(&a));
            out.push(' ');
        }
        out.push_str(p.vars.name(*v));
    }
    out
}

/// Renders the problem in the CPLEX LP text format. Unknowns are free unless
/// declared nonnegative; a constant objective offset is kept as a comment.
pub fn export_lp(p: &LpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {} unknowns, {} constraints", p.vars.len(), p.constraints.len());
    if !p.objective.constant.is_zero() {
        let _ = writeln!(out, "\\ objective constant offset: {}", number(&p.objective.constant));
    }
    out.push_str(match p.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    let _ = writeln!(out, " obj: {}", linear(&p.objective, p));
    out.push_str("Subject To\n");
    let mut needs_dummy = p.objective.terms.is_empty();
    for (i, c) in p.constraints.iter().enumerate() {
        let rel = match c.rel {
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Le => "<=",
        };
        needs_dummy |= c.expr.terms.is_empty();
        let _ = writeln!(out, " c{}: {} {} {}", i, linear(&c.expr, p), rel, number(&-c.expr.constant.clone()));
    }
    out.push_str("Bounds\n");
    for (_, name, k) in p.vars.iter() {
        if k == VarKind::Free {
            let _ = writeln!(out, " {name} free");
        }
    }
    if needs_dummy {
        out.push_str(" dummy_zero = 0\n");
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::model::VarPool;
    use crate::num::rat;

    #[test]
    fn minimal_problem() {
        let mut pool = VarPool::new();
        let x = pool.fresh("x", VarKind::Free);
        let mut p = LpProblem::new(pool).with_objective(AffineForm::var(x), Sense::Minimize);
        let mut e = AffineForm::var(x);
        e.constant = rat(-3);
        p.add(e, Relation::Ge, "t");
        let text = export_lp(&p);
        assert!(text.contains("Minimize"));
        assert!(text.contains("Subject To"));
        assert!(text.contains("x >= 3"));
        assert!(text.contains("x free"));
    }

    #[test]
    fn empty_problem() {
        let p = LpProblem::new(VarPool::new());
        let text = export_lp(&p);
        assert!(text.contains("Subject To\nBounds"));
        assert!(text.ends_with("End\n"));
    }
}
