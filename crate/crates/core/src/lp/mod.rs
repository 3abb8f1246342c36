//! LP data model, exact presolve, a built-in simplex solver, objective
//! construction and LP-format export.

mod export;
mod model;
mod presolve;
pub mod simplex;

pub use export::export_lp;
pub use model::{Constraint, LpProblem, LpSolution, LpStatus, Relation, Sense, VarKind, VarPool};
pub use presolve::{presolve, Reduced};

use crate::num::{approx_rat, from_f64, Rat};
use crate::poly::{AffineForm, LpVar, SymAnnotation};
use simplex::{Field, Outcome, StdLp};
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, HashMap};

/// Which endpoint of a moment component an objective targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundSide {
    Upper,
    Lower,
}

impl BoundSide {
    /// Upper bounds are minimized, lower bounds maximized.
    pub fn sense(self) -> Sense {
        match self {
            BoundSide::Upper => Sense::Minimize,
            BoundSide::Lower => Sense::Maximize,
        }
    }
}

/// The target endpoint of component `k` of `root`, evaluated at `γ₀`.
pub fn build_objective(root: &SymAnnotation, gamma0: &[Rat], k: usize, side: BoundSide) -> AffineForm {
    let c = &root.comps[k];
    let p = match side {
        BoundSide::Upper => &c.hi,
        BoundSide::Lower => &c.lo,
    };
    p.eval(gamma0).expect("valuation covers every program variable")
}

/// Absolute tolerance for accepting a floating-point solution.
pub const RECHECK_TOLERANCE: f64 = 1e-7;

/// Blocks up to this many rows have a floating-point infeasibility verdict
/// confirmed in exact arithmetic.
const EXACT_CONFIRM_ROWS: usize = 400;

/// A presolved problem split into independent blocks, reusable across
/// several objectives over the same constraints.
pub struct Prepared<'a> {
    problem: &'a LpProblem,
    original_objectives: Vec<AffineForm>,
    reduced: Reduced,
    /// Reduced-problem unknowns grouped into connected blocks.
    blocks: Vec<Vec<LpVar>>,
    block_of: HashMap<LpVar, usize>,
    block_rows: Vec<Vec<usize>>,
    feasible_cache: HashMap<usize, Result<(Vec<Rat>, bool), LpStatus>>,
    pub exact_arithmetic: bool,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl<'a> Prepared<'a> {
    pub fn new(problem: &'a LpProblem, objectives: &[AffineForm]) -> Self {
        let reduced = presolve(problem, objectives);
        let mut index: BTreeMap<LpVar, usize> = BTreeMap::new();
        for (e, _) in &reduced.rows {
            for v in e.terms.keys() {
                let n = index.len();
                index.entry(*v).or_insert(n);
            }
        }
        for o in &reduced.objectives {
            for v in o.terms.keys() {
                let n = index.len();
                index.entry(*v).or_insert(n);
            }
        }
        let mut parent: Vec<usize> = (0..index.len()).collect();
        for (e, _) in &reduced.rows {
            let mut it = e.terms.keys();
            if let Some(first) = it.next() {
                let a = find(&mut parent, index[first]);
                for v in it {
                    let b = find(&mut parent, index[v]);
                    if a != b {
                        parent[b] = a;
                    }
                }
            }
        }
        let mut root_block: HashMap<usize, usize> = HashMap::new();
        let mut blocks: Vec<Vec<LpVar>> = Vec::new();
        let mut block_of = HashMap::new();
        for (v, i) in &index {
            let r = find(&mut parent, *i);
            let b = *root_block.entry(r).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(*v);
            block_of.insert(*v, b);
        }
        let mut block_rows = vec![Vec::new(); blocks.len()];
        for (ri, (e, _)) in reduced.rows.iter().enumerate() {
            if let Some(v) = e.terms.keys().next() {
                block_rows[block_of[v]].push(ri);
            }
        }
        Prepared {
            problem,
            original_objectives: objectives.to_vec(),
            reduced,
            blocks,
            block_of,
            block_rows,
            feasible_cache: HashMap::new(),
            exact_arithmetic: false,
        }
    }

    pub fn reduced_size(&self) -> (usize, usize) {
        (self.block_of.len(), self.reduced.rows.len())
    }

    /// Optimizes objective number `idx` (as passed to [`Prepared::new`]).
    pub fn solve(&mut self, idx: usize, sense: Sense) -> LpSolution {
        let obj = self.reduced.objectives[idx].clone();
        let original = self.original_objectives[idx].clone();
        self.solve_form(&obj, sense, original)
    }

    fn solve_form(&mut self, obj: &AffineForm, sense: Sense, original: AffineForm) -> LpSolution {
        if self.reduced.infeasible {
            return LpSolution::failed(LpStatus::Infeasible);
        }
        let n = self.problem.vars.len();
        let mut values = vec![<Rat as Zero>::zero(); n];
        let mut exact = true;
        let mut per_block: BTreeMap<usize, AffineForm> = BTreeMap::new();
        for (v, c) in &obj.terms {
            per_block.entry(self.block_of[v]).or_default().add_term(*v, c);
        }
        for b in 0..self.blocks.len() {
            let res = match per_block.get(&b) {
                Some(o) => {
                    let o = match sense {
                        Sense::Minimize => o.clone(),
                        Sense::Maximize => o.scale(&-Rat::from_integer(1.into())),
                    };
                    self.solve_block(b, &o)
                }
                None => {
                    if !self.feasible_cache.contains_key(&b) {
                        let r = self.solve_block(b, &AffineForm::zero());
                        self.feasible_cache.insert(b, r);
                    }
                    self.feasible_cache[&b].clone()
                }
            };
            match res {
                Ok((vals, ex)) => {
                    exact &= ex;
                    for (v, x) in self.blocks[b].iter().zip(vals) {
                        values[v.0 as usize] = x;
                    }
                }
                Err(status) => return LpSolution::failed(status),
            }
        }
        self.reduced.postsolve(&mut values);
        let max_violation = self.problem.max_violation(&|v| values[v.0 as usize].clone());
        let objective = original.eval(&|v| values[v.0 as usize].clone());
        let exact = exact && max_violation.is_zero();
        let status = if max_violation > from_f64(RECHECK_TOLERANCE) {
            LpStatus::NumericalFailure
        } else {
            LpStatus::Optimal
        };
        LpSolution { status, values, objective: Some(objective), max_violation, exact, pivots: 0 }
    }

    fn block_lp<F: Field>(&self, b: usize, obj: &AffineForm, tighten: Option<f64>) -> (StdLp<F>, HashMap<LpVar, usize>) {
        let cols: HashMap<LpVar, usize> = self.blocks[b].iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let kinds = self.blocks[b].iter().map(|v| self.reduced.kinds[v.0 as usize]).collect();
        let mut rows = Vec::new();
        for &ri in &self.block_rows[b] {
            let (e, rel) = &self.reduced.rows[ri];
            // Rows are scaled to unit max-norm; this does not move the solution.
            let scale = e.terms.values().map(|c| c.abs()).max().filter(|c| !c.is_zero()).unwrap_or_else(|| Rat::from_integer(1.into()));
            let coeffs: Vec<(usize, F)> = e.terms.iter().map(|(v, c)| (cols[v], F::from_rat(&(c / &scale)))).collect();
            let mut rhs = -e.constant.clone() / &scale;
            if let Some(eps) = tighten {
                let scale = Rat::from_integer(1.into()) + rhs.abs();
                match rel {
                    Relation::Ge => rhs += from_f64(eps) * scale,
                    Relation::Le => rhs -= from_f64(eps) * scale,
                    Relation::Eq => {}
                }
            }
            rows.push((coeffs, *rel, F::from_rat(&rhs)));
        }
        let cost = obj.terms.iter().map(|(v, c)| (cols[v], F::from_rat(c))).collect();
        (StdLp { kinds, rows, cost }, cols)
    }

    fn block_violation(&self, b: usize, vals: &[Rat]) -> Rat {
        let idx: HashMap<LpVar, usize> = self.blocks[b].iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut worst = <Rat as Zero>::zero();
        for &ri in &self.block_rows[b] {
            let (e, rel) = &self.reduced.rows[ri];
            let c = Constraint { expr: e.clone(), rel: *rel, tag: String::new() };
            let v = c.violation(&|w| vals[idx[&w]].clone());
            if v > worst {
                worst = v;
            }
        }
        for (i, v) in self.blocks[b].iter().enumerate() {
            if self.reduced.kinds[v.0 as usize] == VarKind::Nonneg && vals[i].is_negative() && -vals[i].clone() > worst {
                worst = -vals[i].clone();
            }
        }
        worst
    }

    /// Solves one block; returns values in block order and whether they are
    /// exact. Floating point is tried first, with perturbed retries, then
    /// exact pivoting.
    fn solve_block(&self, b: usize, obj: &AffineForm) -> Result<(Vec<Rat>, bool), LpStatus> {
        if self.exact_arithmetic {
            return self.solve_block_exact(b, obj);
        }
        let tol = from_f64(RECHECK_TOLERANCE);
        for tighten in [None, Some(1e-7), Some(1e-6)] {
            let (lp, _) = self.block_lp::<f64>(b, obj, tighten);
            let x = match simplex::solve(&lp) {
                Outcome::Optimal { x, .. } => x,
                Outcome::Infeasible if tighten.is_none() => {
                    if self.block_rows[b].len() <= EXACT_CONFIRM_ROWS {
                        return self.solve_block_exact(b, obj);
                    }
                    return Err(LpStatus::Infeasible);
                }
                Outcome::Unbounded if tighten.is_none() => return Err(LpStatus::Unbounded),
                _ => continue,
            };
            let rounded: Vec<Rat> = x.iter().map(|v| approx_rat(*v, 1_000_000)).collect();
            if self.block_violation(b, &rounded).is_zero() {
                return Ok((rounded, true));
            }
            let raw: Vec<Rat> = x.iter().map(|v| from_f64(*v)).collect();
            let viol = self.block_violation(b, &raw);
            if viol.is_zero() {
                return Ok((raw, true));
            }
            if viol <= tol {
                return Ok((raw, false));
            }
        }
        self.solve_block_exact(b, obj)
    }

    fn solve_block_exact(&self, b: usize, obj: &AffineForm) -> Result<(Vec<Rat>, bool), LpStatus> {
        let (lp, _) = self.block_lp::<Rat>(b, obj, None);
        match simplex::solve(&lp) {
            Outcome::Optimal { x, .. } => Ok((x, true)),
            Outcome::Infeasible => Err(LpStatus::Infeasible),
            Outcome::Unbounded => Err(LpStatus::Unbounded),
            Outcome::IterationLimit => Err(LpStatus::NumericalFailure),
        }
    }
}

/// Solves `problem` with its own objective.
pub fn solve(problem: &LpProblem) -> LpSolution {
    let mut prep = Prepared::new(problem, std::slice::from_ref(&problem.objective));
    prep.solve(0, problem.sense)
}

/// Solves `problem` with exact rational pivoting throughout.
pub fn solve_exact(problem: &LpProblem) -> LpSolution {
    let mut prep = Prepared::new(problem, std::slice::from_ref(&problem.objective));
    prep.exact_arithmetic = true;
    prep.solve(0, problem.sense)
}
