use super::ast::{Dist, Expr, Program, Stmt};
use crate::num::Rat;
use num_traits::{One, Zero};
use std::collections::BTreeSet;
use std::fmt;

/// A violated program invariant together with where it occurred.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    UndefinedFunction { name: String, location: String },
    ProbabilityOutOfRange { p: Rat, location: String },
    UniformBounds { location: String },
    DiscreteEmpty { location: String },
    DiscreteNegative { location: String },
    DiscreteSum { location: String },
    UnknownVariable { name: String, location: String },
    NonIntegralUpdate { name: String, location: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UndefinedFunction { name, location } => write!(f, "{location}: call to undefined function '{name}'"),
            Diagnostic::ProbabilityOutOfRange { p, location } => write!(f, "{location}: probability {p} outside [0,1]"),
            Diagnostic::UniformBounds { location } => write!(f, "{location}: uniform requires a < b"),
            Diagnostic::DiscreteEmpty { location } => write!(f, "{location}: discrete distribution has empty support"),
            Diagnostic::DiscreteNegative { location } => write!(f, "{location}: discrete distribution has a negative weight"),
            Diagnostic::DiscreteSum { location } => write!(f, "{location}: discrete weights do not sum to 1"),
            Diagnostic::UnknownVariable { name, location } => write!(f, "{location}: variable '{name}' is not in the program variable set"),
            Diagnostic::NonIntegralUpdate { name, location } => {
                write!(f, "{location}: update of integer variable '{name}' may produce a non-integer")
            }
        }
    }
}

fn expr_is_integral(e: &Expr, ints: &BTreeSet<String>) -> bool {
    match e {
        Expr::Var(x) => ints.contains(x),
        Expr::Const(c) => c.is_integer(),
        Expr::Add(a, b) | Expr::Mul(a, b) => expr_is_integral(a, ints) && expr_is_integral(b, ints),
    }
}

fn check_stmt(p: &Program, fname: &str, s: &Stmt, out: &mut Vec<Diagnostic>) {
    let vars: BTreeSet<&String> = p.vars.iter().collect();
    let mut idx = 0usize;
    s.visit(&mut |st| {
        let location = format!("{fname}#{idx}");
        idx += 1;
        let mut used = BTreeSet::new();
        match st {
            Stmt::Call(f) if !p.decls.contains_key(f) => {
                out.push(Diagnostic::UndefinedFunction { name: f.clone(), location: location.clone() })
            }
            Stmt::Prob(q, _, _) if *q < Rat::zero() || *q > Rat::one() => {
                out.push(Diagnostic::ProbabilityOutOfRange { p: q.clone(), location: location.clone() })
            }
            Stmt::Sample(x, d) => {
                used.insert(x.clone());
                match d {
                    Dist::Uniform(a, b) if a >= b => out.push(Diagnostic::UniformBounds { location: location.clone() }),
                    Dist::Discrete(pts) => {
                        if pts.is_empty() {
                            out.push(Diagnostic::DiscreteEmpty { location: location.clone() });
                        }
                        if pts.iter().any(|(_, q)| *q < Rat::zero()) {
                            out.push(Diagnostic::DiscreteNegative { location: location.clone() });
                        }
                        let total: Rat = pts.iter().map(|(_, q)| q.clone()).sum();
                        if !pts.is_empty() && total != Rat::one() {
                            out.push(Diagnostic::DiscreteSum { location: location.clone() });
                        }
                    }
                    _ => {}
                }
                if p.ints.contains(x) {
                    let ok = match d {
                        Dist::Discrete(pts) => pts.iter().all(|(v, _)| v.is_integer()),
                        Dist::Uniform(..) => false,
                    };
                    if !ok {
                        out.push(Diagnostic::NonIntegralUpdate { name: x.clone(), location: location.clone() });
                    }
                }
            }
            Stmt::Assign(x, e) => {
                used.insert(x.clone());
                e.collect_vars(&mut used);
                if p.ints.contains(x) && !expr_is_integral(e, &p.ints) {
                    out.push(Diagnostic::NonIntegralUpdate { name: x.clone(), location: location.clone() });
                }
            }
            Stmt::While(c, _) | Stmt::If(c, _, _) => c.collect_vars(&mut used),
            _ => {}
        }
        for v in used {
            if !vars.contains(&v) {
                out.push(Diagnostic::UnknownVariable { name: v, location: location.clone() });
            }
        }
    });
}

/// Checks every program invariant; the result is empty iff all hold.
pub fn validate(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    check_stmt(p, "main", &p.main, &mut out);
    for (name, body) in &p.decls {
        check_stmt(p, name, body, &mut out);
    }
    let mut pre_vars = BTreeSet::new();
    p.pre.collect_vars(&mut pre_vars);
    for v in pre_vars {
        if !p.vars.contains(&v) {
            out.push(Diagnostic::UnknownVariable { name: v, location: "@pre".into() });
        }
    }
    out
}
