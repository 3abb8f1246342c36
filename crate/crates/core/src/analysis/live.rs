//! Interprocedural live-variable analysis. Templates only range over the
//! variables live at their program point.

use super::locs::{Loc, Locations};
use crate::lang::{Program, Stmt};
use std::collections::{BTreeSet, HashMap};

pub type VarSet = BTreeSet<usize>;

#[derive(Clone, Debug, Default)]
pub struct Liveness {
    /// Live variables before each statement.
    pub live_in: HashMap<Loc, VarSet>,
    pub entry: HashMap<String, VarSet>,
    pub exit: HashMap<String, VarSet>,
}

impl Liveness {
    pub fn at(&self, l: Loc) -> VarSet {
        self.live_in.get(&l).cloned().unwrap_or_default()
    }
}

struct Pass<'a> {
    prog: &'a Program,
    locs: &'a Locations,
    res: Liveness,
    /// Live-out sets observed at call sites during this pass.
    after_calls: HashMap<String, VarSet>,
}

impl Pass<'_> {
    fn idx(&self, name: &str) -> usize {
        self.prog.var_index(name).expect("declared variable")
    }

    fn run(&mut self, s: &Stmt, out: &VarSet) -> VarSet {
        let inn = match s {
            Stmt::Skip | Stmt::Tick(_) => out.clone(),
            Stmt::Assign(x, e) => {
                let xi = self.idx(x);
                if out.contains(&xi) {
                    let mut r = out.clone();
                    r.remove(&xi);
                    let mut vs = BTreeSet::new();
                    e.collect_vars(&mut vs);
                    r.extend(vs.iter().map(|v| self.idx(v)));
                    r
                } else {
                    out.clone()
                }
            }
            Stmt::Sample(x, _) => {
                let mut r = out.clone();
                r.remove(&self.idx(x));
                r
            }
            Stmt::Call(f) => {
                self.after_calls.entry(f.clone()).or_default().extend(out.iter().copied());
                let mut r = out.clone();
                r.extend(self.res.entry.get(f).cloned().unwrap_or_default());
                r
            }
            Stmt::Seq(a, b) => {
                let mid = self.run(b, out);
                self.run(a, &mid)
            }
            Stmt::Prob(_, a, b) => {
                let mut r = self.run(a, out);
                r.extend(self.run(b, out));
                r
            }
            Stmt::If(c, a, b) => {
                let mut r = self.run(a, out);
                r.extend(self.run(b, out));
                let mut vs = BTreeSet::new();
                c.collect_vars(&mut vs);
                r.extend(vs.iter().map(|v| self.idx(v)));
                r
            }
            Stmt::While(c, body) => {
                let mut vs = BTreeSet::new();
                c.collect_vars(&mut vs);
                let mut head: VarSet = out.clone();
                head.extend(vs.iter().map(|v| self.idx(v)));
                loop {
                    let b = self.run(body, &head);
                    let before = head.len();
                    head.extend(b);
                    if head.len() == before {
                        break;
                    }
                }
                head
            }
        };
        self.res.live_in.insert(self.locs.of(s), inn.clone());
        inn
    }
}

pub fn liveness(prog: &Program, locs: &Locations) -> Liveness {
    let mut pass = Pass { prog, locs, res: Liveness::default(), after_calls: HashMap::new() };
    loop {
        pass.after_calls.clear();
        pass.run(&prog.main, &VarSet::new());
        for (f, body) in &prog.decls {
            let exit = pass.res.exit.get(f).cloned().unwrap_or_default();
            let entry = pass.run(body, &exit);
            pass.res.entry.insert(f.clone(), entry);
        }
        let mut changed = false;
        for f in prog.decls.keys() {
            let seen = pass.after_calls.get(f).cloned().unwrap_or_default();
            let cur = pass.res.exit.entry(f.clone()).or_default();
            let before = cur.len();
            cur.extend(seen);
            changed |= cur.len() != before;
        }
        if !changed {
            // Entries may still grow from updated exits; one more check.
            let mut stable = true;
            for (f, body) in &prog.decls {
                let exit = pass.res.exit[f].clone();
                let entry = pass.run(body, &exit);
                if pass.res.entry.get(f) != Some(&entry) {
                    pass.res.entry.insert(f.clone(), entry);
                    stable = false;
                }
            }
            if stable {
                break;
            }
        }
    }
    pass.res
}
