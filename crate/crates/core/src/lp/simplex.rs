//! Primal simplex on a sparse row tableau, generic over the scalar field.
//!
//! Variables are either free or nonnegative. Free variables are never split:
//! a nonbasic free variable may enter in either direction and a basic free
//! variable never leaves. Pricing is Dantzig's rule; after a run of
//! degenerate pivots the solver switches to Bland's rule until the objective
//! moves again.

use super::model::{Relation, VarKind};
use crate::num::{from_f64, to_f64, Rat};
use num_traits::{One, Signed, Zero};
use std::fmt::Debug;

/// Scalar field for the tableau, carrying its own tolerance policy.
pub trait Field: Clone + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_rat(r: &Rat) -> Self;
    fn to_rat(&self) -> Rat;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Entry small enough to drop from the tableau.
    fn negligible(&self) -> bool;
    /// Strictly positive beyond the pivot tolerance.
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool {
        self.neg().is_pos()
    }
    /// Positive beyond the feasibility tolerance (phase 1 residual).
    fn infeasible_residual(&self) -> bool;
    fn lt(&self, o: &Self) -> bool;
    fn abs_gt(&self, o: &Self) -> bool;
}

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rat(r: &Rat) -> Self {
        to_f64(r)
    }
    fn to_rat(&self) -> Rat {
        from_f64(*self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn negligible(&self) -> bool {
        self.abs() < 1e-12
    }
    fn is_pos(&self) -> bool {
        *self > 1e-9
    }
    fn infeasible_residual(&self) -> bool {
        *self > 1e-7
    }
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
    fn abs_gt(&self, o: &Self) -> bool {
        self.abs() > o.abs()
    }
}

impl Field for Rat {
    fn zero() -> Self {
        <Rat as Zero>::zero()
    }
    fn one() -> Self {
        <Rat as One>::one()
    }
    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }
    fn to_rat(&self) -> Rat {
        self.clone()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn negligible(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn infeasible_residual(&self) -> bool {
        Signed::is_positive(self)
    }
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
    fn abs_gt(&self, o: &Self) -> bool {
        self.abs() > o.abs()
    }
}

/// A minimization problem `min c·x` subject to sparse rows `a·x (rel) b`.
#[derive(Clone, Debug)]
pub struct StdLp<F> {
    pub kinds: Vec<VarKind>,
    pub rows: Vec<(Vec<(usize, F)>, Relation, F)>,
    pub cost: Vec<(usize, F)>,
}

#[derive(Clone, Debug)]
pub enum Outcome<F> {
    Optimal { x: Vec<F>, objective: F, pivots: usize },
    Infeasible,
    Unbounded,
    IterationLimit,
}

type Row<F> = Vec<(usize, F)>;

fn row_get<F: Field>(row: &Row<F>, j: usize) -> Option<&F> {
    row.binary_search_by_key(&j, |e| e.0).ok().map(|i| &row[i].1)
}

/// `dst -= k · src`, dropping negligible entries.
fn row_axpy<F: Field>(dst: &Row<F>, k: &F, src: &Row<F>) -> Row<F> {
    let mut out = Vec::with_capacity(dst.len() + src.len());
    let (mut i, mut j) = (0, 0);
    while i < dst.len() || j < src.len() {
        if j == src.len() || (i < dst.len() && dst[i].0 < src[j].0) {
            out.push(dst[i].clone());
            i += 1;
        } else if i == dst.len() || src[j].0 < dst[i].0 {
            let v = k.mul(&src[j].1).neg();
            if !v.negligible() {
                out.push((src[j].0, v));
            }
            j += 1;
        } else {
            let v = dst[i].1.sub(&k.mul(&src[j].1));
            if !v.negligible() {
                out.push((dst[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

struct Tableau<F> {
    rows: Vec<Row<F>>,
    rhs: Vec<F>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    free: Vec<bool>,
    /// Columns that may not enter (retired artificials).
    blocked: Vec<bool>,
    d: Vec<F>,
    z: F,
    pivots: usize,
}

const DEGENERATE_STREAK: usize = 50;

impl<F: Field> Tableau<F> {
    fn pivot(&mut self, r: usize, j: usize) {
        let p = row_get(&self.rows[r], j).cloned().expect("pivot entry");
        let inv = F::one().div(&p);
        let mut pr: Row<F> = self.rows[r]
            .iter()
            .filter_map(|(c, v)| {
                let w = v.mul(&inv);
                if *c == j {
                    Some((*c, F::one()))
                } else if w.negligible() {
                    None
                } else {
                    Some((*c, w))
                }
            })
            .collect();
        pr.shrink_to_fit();
        self.rhs[r] = self.rhs[r].mul(&inv);
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            if let Some(a) = row_get(&self.rows[i], j).cloned() {
                let new = row_axpy(&self.rows[i], &a, &pr);
                self.rows[i] = new;
                self.rhs[i] = self.rhs[i].sub(&a.mul(&self.rhs[r]));
            }
        }
        let dj = self.d[j].clone();
        if !dj.negligible() {
            for (c, v) in &pr {
                self.d[*c] = self.d[*c].sub(&dj.mul(v));
            }
            self.d[j] = F::zero();
            self.z = self.z.add(&dj.mul(&self.rhs[r]));
        }
        self.rows[r] = pr;
        let old = self.basis[r];
        self.is_basic[old] = false;
        self.basis[r] = j;
        self.is_basic[j] = true;
        self.pivots += 1;
    }

    /// Runs primal simplex iterations on the current cost row.
    fn optimize(&mut self, limit: usize) -> Result<(), Outcome<F>> {
        let mut streak = 0usize;
        for _ in 0..limit {
            let bland = streak >= DEGENERATE_STREAK;
            // Entering column and direction (+1 increase, -1 decrease).
            let mut enter: Option<(usize, bool)> = None;
            let mut best = F::zero();
            for j in 0..self.d.len() {
                if self.is_basic[j] || self.blocked[j] {
                    continue;
                }
                let dj = &self.d[j];
                let cand = if dj.is_neg() {
                    Some(true)
                } else if self.free[j] && dj.is_pos() {
                    Some(false)
                } else {
                    None
                };
                if let Some(up) = cand {
                    if bland {
                        enter = Some((j, up));
                        break;
                    }
                    if enter.is_none() || dj.abs_gt(&best) {
                        enter = Some((j, up));
                        best = dj.clone();
                    }
                }
            }
            let (j, up) = match enter {
                None => return Ok(()),
                Some(e) => e,
            };
            // Ratio test over nonnegative basic variables.
            let mut leave: Option<(usize, F, F)> = None;
            for i in 0..self.rows.len() {
                if self.free[self.basis[i]] {
                    continue;
                }
                let a = match row_get(&self.rows[i], j) {
                    Some(a) => {
                        if up {
                            a.clone()
                        } else {
                            a.neg()
                        }
                    }
                    None => continue,
                };
                if !a.is_pos() {
                    continue;
                }
                let ratio = self.rhs[i].div(&a);
                let better = match &leave {
                    None => true,
                    Some((li, lr, la)) => {
                        if lr.sub(&ratio).negligible() {
                            if bland {
                                self.basis[i] < self.basis[*li]
                            } else {
                                a.abs_gt(la)
                            }
                        } else {
                            ratio.lt(lr)
                        }
                    }
                };
                if better {
                    leave = Some((i, ratio, a));
                }
            }
            let (r, ratio, _) = match leave {
                None => return Err(Outcome::Unbounded),
                Some(l) => l,
            };
            if ratio.is_pos() {
                streak = 0;
            } else {
                streak += 1;
            }
            self.pivot(r, j);
        }
        Err(Outcome::IterationLimit)
    }

    fn set_cost(&mut self, cost: &[F]) {
        self.d = cost.to_vec();
        self.z = F::zero();
        for i in 0..self.rows.len() {
            let cb = cost[self.basis[i]].clone();
            if cb.negligible() {
                continue;
            }
            for (c, v) in &self.rows[i] {
                self.d[*c] = self.d[*c].sub(&cb.mul(v));
            }
            self.z = self.z.add(&cb.mul(&self.rhs[i]));
        }
        for i in 0..self.rows.len() {
            self.d[self.basis[i]] = F::zero();
        }
    }
}

/// Solves `lp` to optimality with the two-phase method.
pub fn solve<F: Field>(lp: &StdLp<F>) -> Outcome<F> {
    let n = lp.kinds.len();
    let m = lp.rows.len();
    let n_slack = lp.rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let total_wo_art = n + n_slack;
    let mut rows: Vec<Row<F>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = vec![usize::MAX; m];
    let mut slack_col = n;
    let mut needs_art = Vec::new();
    for (i, (coeffs, rel, b)) in lp.rows.iter().enumerate() {
        let mut row: Row<F> = coeffs.iter().filter(|(_, v)| !v.negligible()).cloned().collect();
        row.sort_by_key(|e| e.0);
        let mut slack = None;
        match rel {
            Relation::Le => {
                row.push((slack_col, F::one()));
                slack = Some((slack_col, 1));
                slack_col += 1;
            }
            Relation::Ge => {
                row.push((slack_col, F::one().neg()));
                slack = Some((slack_col, -1));
                slack_col += 1;
            }
            Relation::Eq => {}
        }
        let mut b = b.clone();
        let mut sign = 1;
        if b.is_neg() || (b.negligible() && slack.map(|s| s.1 < 0).unwrap_or(false)) {
            for e in row.iter_mut() {
                e.1 = e.1.neg();
            }
            b = b.neg();
            sign = -1;
        }
        match slack {
            Some((c, s)) if s * sign > 0 => basis[i] = c,
            _ => needs_art.push(i),
        }
        rows.push(row);
        rhs.push(b);
    }
    let n_art = needs_art.len();
    let total = total_wo_art + n_art;
    for (k, &i) in needs_art.iter().enumerate() {
        rows[i].push((total_wo_art + k, F::one()));
        basis[i] = total_wo_art + k;
    }
    let mut free = vec![false; total];
    for (j, k) in lp.kinds.iter().enumerate() {
        free[j] = *k == VarKind::Free;
    }
    let mut is_basic = vec![false; total];
    for &b in &basis {
        is_basic[b] = true;
    }
    let mut t = Tableau {
        rows,
        rhs,
        basis,
        is_basic,
        free,
        blocked: vec![false; total],
        d: vec![F::zero(); total],
        z: F::zero(),
        pivots: 0,
    };
    let limit = 10 * (m + total) + 1_000;

    if n_art > 0 {
        let mut cost = vec![F::zero(); total];
        for c in cost.iter_mut().skip(total_wo_art) {
            *c = F::one();
        }
        t.set_cost(&cost);
        match t.optimize(limit) {
            Ok(()) => {}
            Err(Outcome::Unbounded) => return Outcome::Infeasible,
            Err(e) => return e,
        }
        if t.z.infeasible_residual() {
            return Outcome::Infeasible;
        }
        // Drive remaining artificials out of the basis or drop their rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= total_wo_art {
                let cand = t.rows[i].iter().find(|(c, v)| *c < total_wo_art && (v.is_pos() || v.is_neg())).map(|e| e.0);
                match cand {
                    Some(j) => {
                        t.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        let b = t.basis[i];
                        t.is_basic[b] = false;
                        t.rows.swap_remove(i);
                        t.rhs.swap_remove(i);
                        t.basis.swap_remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for j in total_wo_art..total {
            t.blocked[j] = true;
        }
        for row in t.rows.iter_mut() {
            row.retain(|(c, _)| *c < total_wo_art);
        }
    }

    let mut cost = vec![F::zero(); total];
    for (j, c) in &lp.cost {
        cost[*j] = cost[*j].add(c);
    }
    t.set_cost(&cost);
    if let Err(e) = t.optimize(limit) {
        return e;
    }
    let mut x = vec![F::zero(); n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs[i].clone();
        }
    }
    Outcome::Optimal { x, objective: t.z.clone(), pivots: t.pivots }
}
