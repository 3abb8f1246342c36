//! Exact presolve: eliminates free unknowns through equalities and turns
//! equalities holding a lone nonnegative unknown into inequalities.

use super::model::{LpProblem, Relation, VarKind};
use crate::num::Rat;
use crate::poly::{AffineForm, LpVar};
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Skip an elimination whose estimated fill-in exceeds this many entries.
const FILL_LIMIT: usize = 40_000;

#[derive(Clone, Debug)]
pub struct Reduced {
    pub rows: Vec<(AffineForm, Relation)>,
    pub objectives: Vec<AffineForm>,
    /// `var = expr`, in elimination order.
    pub subs: Vec<(LpVar, AffineForm)>,
    pub kinds: Vec<VarKind>,
    /// Some eliminated row reduced to a false constant.
    pub infeasible: bool,
}

impl Reduced {
    /// Extends values of the remaining unknowns to every unknown.
    pub fn postsolve(&self, values: &mut [Rat]) {
        for (v, e) in self.subs.iter().rev() {
            let val = e.eval(&|w| values[w.0 as usize].clone());
            values[v.0 as usize] = val;
        }
    }
}

struct State {
    rows: Vec<Option<(AffineForm, Relation)>>,
    occ: HashMap<LpVar, BTreeSet<usize>>,
    objectives: Vec<AffineForm>,
    subs: Vec<(LpVar, AffineForm)>,
}

impl State {
    fn replace_row(&mut self, i: usize, new: AffineForm) {
        let (old, rel) = self.rows[i].take().expect("live row");
        for v in old.terms.keys() {
            if !new.terms.contains_key(v) {
                if let Some(s) = self.occ.get_mut(v) {
                    s.remove(&i);
                }
            }
        }
        for v in new.terms.keys() {
            self.occ.entry(*v).or_default().insert(i);
        }
        self.rows[i] = Some((new, rel));
    }

    fn remove_row(&mut self, i: usize) {
        if let Some((e, _)) = self.rows[i].take() {
            for v in e.terms.keys() {
                if let Some(s) = self.occ.get_mut(v) {
                    s.remove(&i);
                }
            }
        }
    }

    /// Records `v = sub` and substitutes it everywhere.
    fn eliminate(&mut self, v: LpVar, sub: AffineForm) {
        let rows: Vec<usize> = self.occ.get(&v).map(|s| s.iter().copied().collect()).unwrap_or_default();
        for i in rows {
            let (e, _) = self.rows[i].as_ref().expect("live row");
            let c = e.coeff(v);
            let mut ne = e.clone();
            ne.terms.remove(&v);
            ne.add_scaled(&sub, &c);
            self.replace_row(i, ne);
        }
        self.occ.remove(&v);
        for obj in self.objectives.iter_mut() {
            let c = obj.coeff(v);
            if !c.is_zero() {
                obj.terms.remove(&v);
                obj.add_scaled(&sub, &c);
            }
        }
        self.subs.push((v, sub));
    }
}

pub fn presolve(p: &LpProblem, objectives: &[AffineForm]) -> Reduced {
    let kinds: Vec<VarKind> = p.vars.iter().map(|(_, _, k)| k).collect();
    let mut st = State { rows: Vec::new(), occ: HashMap::new(), objectives: objectives.to_vec(), subs: Vec::new() };
    for (i, c) in p.constraints.iter().enumerate() {
        for v in c.expr.terms.keys() {
            st.occ.entry(*v).or_default().insert(i);
        }
        st.rows.push(Some((c.expr.clone(), c.rel)));
    }

    // Free unknowns through equalities, cheapest first.
    loop {
        let mut changed = false;
        for i in 0..st.rows.len() {
            let (e, rel) = match &st.rows[i] {
                Some(r) => r,
                None => continue,
            };
            if *rel != Relation::Eq {
                continue;
            }
            let mut best: Option<(usize, LpVar)> = None;
            for v in e.terms.keys() {
                if kinds[v.0 as usize] != VarKind::Free {
                    continue;
                }
                let n = st.occ.get(v).map(|s| s.len()).unwrap_or(0);
                if best.map(|(bn, _)| n < bn).unwrap_or(true) {
                    best = Some((n, *v));
                }
            }
            let (n, v) = match best {
                Some(b) => b,
                None => continue,
            };
            if n.saturating_mul(e.terms.len()) > FILL_LIMIT {
                continue;
            }
            let a = e.coeff(v);
            let mut rest = e.clone();
            rest.terms.remove(&v);
            let sub = rest.scale(&(-Rat::one() / a));
            st.remove_row(i);
            st.eliminate(v, sub);
            changed = true;
        }
        if !changed {
            break;
        }
    }

    // Lone nonnegative unknowns in equalities become inequality slacks.
    let in_objective: BTreeSet<LpVar> = st.objectives.iter().flat_map(|o| o.terms.keys().copied()).collect();
    for (idx, k) in kinds.iter().enumerate() {
        let v = LpVar(idx as u32);
        if *k != VarKind::Nonneg || in_objective.contains(&v) {
            continue;
        }
        let i = match st.occ.get(&v) {
            Some(s) if s.len() == 1 => *s.iter().next().expect("one row"),
            _ => continue,
        };
        let (e, rel) = st.rows[i].clone().expect("live row");
        if rel != Relation::Eq {
            continue;
        }
        let a = e.coeff(v);
        let mut rest = e.clone();
        rest.terms.remove(&v);
        let sub = rest.scale(&(-Rat::one() / &a));
        st.occ.remove(&v);
        st.rows[i] = Some((rest, if a.is_positive() { Relation::Le } else { Relation::Ge }));
        st.subs.push((v, sub));
    }

    // Constant rows are checked and dropped; duplicates collapse.
    let mut infeasible = false;
    let mut seen: BTreeMap<(Vec<(LpVar, Rat)>, u8), Rat> = BTreeMap::new();
    let mut rows = Vec::new();
    for (e, rel) in st.rows.into_iter().flatten() {
        if e.terms.is_empty() {
            let ok = match rel {
                Relation::Eq => e.constant.is_zero(),
                Relation::Ge => !e.constant.is_negative(),
                Relation::Le => !e.constant.is_positive(),
            };
            infeasible |= !ok;
            continue;
        }
        let key_terms: Vec<(LpVar, Rat)> = e.terms.iter().map(|(v, c)| (*v, c.clone())).collect();
        let code = match rel {
            Relation::Eq => 0u8,
            Relation::Ge => 1,
            Relation::Le => 2,
        };
        let key = (key_terms, code);
        // Same left side: keep the tightest constant.
        match seen.get(&key) {
            Some(c) if rel != Relation::Eq => {
                let tighter = match rel {
                    Relation::Ge => e.constant < *c,
                    _ => e.constant > *c,
                };
                if !tighter {
                    continue;
                }
            }
            Some(c) if *c == e.constant => continue,
            _ => {}
        }
        seen.insert(key, e.constant.clone());
        rows.push((e, rel));
    }
    Reduced { rows, objectives: st.objectives, subs: st.subs, kinds, infeasible }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::model::VarPool;
    use crate::num::rat;

    #[test]
    fn eliminates_and_restores() {
        let mut pool = VarPool::new();
        let x = pool.fresh("x", VarKind::Free);
        let y = pool.fresh("y", VarKind::Free);
        let s = pool.fresh("s", VarKind::Nonneg);
        let mut p = LpProblem::new(pool);
        // x - y - 2 = 0 ; y + s - 5 = 0
        let mut e = AffineForm::var(x);
        e.add_term(y, &rat(-1));
        e.constant = rat(-2);
        p.add(e, Relation::Eq, "a");
        let mut e = AffineForm::var(y);
        e.add_term(s, &rat(1));
        e.constant = rat(-5);
        p.add(e, Relation::Eq, "b");
        let r = presolve(&p, &[AffineForm::var(x)]);
        assert!(!r.infeasible);
        let mut vals = vec![rat(0); 3];
        // Whatever remains, fixing the remaining unknowns then postsolving
        // must satisfy every original constraint.
        for (e, _) in &r.rows {
            for v in e.terms.keys() {
                vals[v.0 as usize] = rat(1);
            }
        }
        r.postsolve(&mut vals);
        assert_eq!(p.max_violation(&|v| vals[v.0 as usize].clone()), rat(0));
    }
}
