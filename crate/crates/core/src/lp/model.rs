use crate::num::Rat;
use crate::poly::{AffineForm, LpVar};
use num_traits::Zero;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    Free,
    Nonneg,
}

/// Declared LP unknowns with their names and sign restrictions.
#[derive(Clone, Debug, Default)]
pub struct VarPool {
    names: Vec<String>,
    kinds: Vec<VarKind>,
}

impl VarPool {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn fresh(&mut self, name: impl Into<String>, kind: VarKind) -> LpVar {
        self.names.push(name.into());
        self.kinds.push(kind);
        LpVar(self.names.len() as u32 - 1)
    }
    pub fn len(&self) -> usize {
        self.names.len()
    }
    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
    pub fn name(&self, v: LpVar) -> &str {
        &self.names[v.0 as usize]
    }
    pub fn kind(&self, v: LpVar) -> VarKind {
        self.kinds[v.0 as usize]
    }
    pub fn iter(&self) -> impl Iterator<Item = (LpVar, &str, VarKind)> {
        self.names.iter().zip(&self.kinds).enumerate().map(|(i, (n, k))| (LpVar(i as u32), n.as_str(), *k))
    }
}

/// `expr = 0`, `expr ≥ 0` or `expr ≤ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Eq,
    Ge,
    Le,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Le => "<=",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub expr: AffineForm,
    pub rel: Relation,
    /// Rule and program location that produced the constraint.
    pub tag: String,
}

impl Constraint {
    /// Signed violation under an assignment (0 when satisfied).
    pub fn violation(&self, assign: &dyn Fn(LpVar) -> Rat) -> Rat {
        let v = self.expr.eval(assign);
        match self.rel {
            Relation::Eq => {
                if v < Rat::zero() {
                    -v
                } else {
                    v
                }
            }
            Relation::Ge => {
                if v < Rat::zero() {
                    -v
                } else {
                    Rat::zero()
                }
            }
            Relation::Le => {
                if v > Rat::zero() {
                    v
                } else {
                    Rat::zero()
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Linear constraints over declared unknowns plus an objective.
#[derive(Clone, Debug)]
pub struct LpProblem {
    pub vars: VarPool,
    pub constraints: Vec<Constraint>,
    pub objective: AffineForm,
    pub sense: Sense,
}

impl LpProblem {
    pub fn new(vars: VarPool) -> Self {
        LpProblem { vars, constraints: Vec::new(), objective: AffineForm::zero(), sense: Sense::Minimize }
    }
    pub fn add(&mut self, expr: AffineForm, rel: Relation, tag: impl Into<String>) {
        self.constraints.push(Constraint { expr, rel, tag: tag.into() });
    }
    pub fn with_objective(mut self, objective: AffineForm, sense: Sense) -> Self {
        self.objective = objective;
        self.sense = sense;
        self
    }
    /// Largest violation of any constraint or sign restriction.
    pub fn max_violation(&self, assign: &dyn Fn(LpVar) -> Rat) -> Rat {
        let mut worst = Rat::zero();
        for c in &self.constraints {
            let v = c.violation(assign);
            if v > worst {
                worst = v;
            }
        }
        for (v, _, k) in self.vars.iter() {
            if k == VarKind::Nonneg {
                let x = assign(v);
                if x < Rat::zero() && -x.clone() > worst {
                    worst = -x;
                }
            }
        }
        worst
    }
    /// One constraint per line with its tag, for debugging.
    pub fn dump(&self) -> String {
        let name = |v: LpVar| self.vars.name(v).to_string();
        let mut out = String::new();
        for c in &self.constraints {
            out.push_str(&format!("[{}] {} {} 0\n", c.tag, c.expr.render(&name), c.rel));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::NumericalFailure => "numerical failure",
        })
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// One value per declared unknown (empty unless optimal).
    pub values: Vec<Rat>,
    pub objective: Option<Rat>,
    /// Largest constraint violation of the returned assignment.
    pub max_violation: Rat,
    /// True when the assignment satisfies every constraint exactly.
    pub exact: bool,
    pub pivots: usize,
}

impl LpSolution {
    pub fn failed(status: LpStatus) -> Self {
        LpSolution { status, values: Vec::new(), objective: None, max_violation: Rat::zero(), exact: false, pivots: 0 }
    }
    pub fn value(&self, v: LpVar) -> Rat {
        self.values.get(v.0 as usize).cloned().unwrap_or_else(Rat::zero)
    }
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}
