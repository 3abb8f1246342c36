use crate::num::{Rat, rat};
use indexmap::IndexMap;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// Arithmetic expressions. Subtraction is sugar: `a - b` parses as `a + (-1) * b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(String),
    Const(Rat),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }
    pub fn int(n: i64) -> Expr {
        Expr::Const(rat(n))
    }
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }
    /// The desugared form of `a - b`.
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(a, Expr::neg(b))
    }
    pub fn neg(e: Expr) -> Expr {
        match e {
            Expr::Const(c) => Expr::Const(-c),
            other => Expr::mul(Expr::Const(-Rat::one()), other),
        }
    }

    pub fn eval(&self, lookup: &dyn Fn(&str) -> Rat) -> Rat {
        match self {
            Expr::Var(x) => lookup(x),
            Expr::Const(c) => c.clone(),
            Expr::Add(a, b) => a.eval(lookup) + b.eval(lookup),
            Expr::Mul(a, b) => a.eval(lookup) * b.eval(lookup),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(x) => {
                out.insert(x.clone());
            }
            Expr::Const(_) => {}
            Expr::Add(a, b) | Expr::Mul(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Affine form `Σ c_x · x + c0` if the expression is linear.
    pub fn linear(&self) -> Option<(BTreeMap<String, Rat>, Rat)> {
        match self {
            Expr::Var(x) => Some((BTreeMap::from([(x.clone(), Rat::one())]), Rat::zero())),
            Expr::Const(c) => Some((BTreeMap::new(), c.clone())),
            Expr::Add(a, b) => {
                let (mut ta, ca) = a.linear()?;
                let (tb, cb) = b.linear()?;
                for (x, c) in tb {
                    let e = ta.entry(x).or_insert_with(Rat::zero);
                    *e += c;
                }
                ta.retain(|_, c| !c.is_zero());
                Some((ta, ca + cb))
            }
            Expr::Mul(a, b) => {
                let (ta, ca) = a.linear()?;
                let (tb, cb) = b.linear()?;
                if ta.is_empty() {
                    let terms = tb.into_iter().map(|(x, c)| (x, c * &ca)).filter(|(_, c)| !c.is_zero()).collect();
                    Some((terms, ca * cb))
                } else if tb.is_empty() {
                    let terms = ta.into_iter().map(|(x, c)| (x, c * &cb)).filter(|(_, c)| !c.is_zero()).collect();
                    Some((terms, ca * cb))
                } else {
                    None
                }
            }
        }
    }
}

/// Boolean guards. `<`, `>=`, `>`, `==` and `or` are sugar over these four forms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Cond {
    True,
    Not(Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Le(Expr, Expr),
}

impl Cond {
    pub fn not(c: Cond) -> Cond {
        Cond::Not(Box::new(c))
    }
    pub fn and(a: Cond, b: Cond) -> Cond {
        Cond::And(Box::new(a), Box::new(b))
    }
    pub fn le(a: Expr, b: Expr) -> Cond {
        Cond::Le(a, b)
    }
    /// `a < b` desugars to `not (b <= a)`.
    pub fn lt(a: Expr, b: Expr) -> Cond {
        Cond::not(Cond::Le(b, a))
    }
    pub fn ge(a: Expr, b: Expr) -> Cond {
        Cond::Le(b, a)
    }
    pub fn gt(a: Expr, b: Expr) -> Cond {
        Cond::lt(b, a)
    }
    pub fn or(a: Cond, b: Cond) -> Cond {
        Cond::not(Cond::and(Cond::not(a), Cond::not(b)))
    }
    pub fn eq(a: Expr, b: Expr) -> Cond {
        Cond::and(Cond::Le(a.clone(), b.clone()), Cond::Le(b, a))
    }

    pub fn eval(&self, lookup: &dyn Fn(&str) -> Rat) -> bool {
        match self {
            Cond::True => true,
            Cond::Not(c) => !c.eval(lookup),
            Cond::And(a, b) => a.eval(lookup) && b.eval(lookup),
            Cond::Le(a, b) => a.eval(lookup) <= b.eval(lookup),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Cond::True => {}
            Cond::Not(c) => c.collect_vars(out),
            Cond::And(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Cond::Le(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

/// Sampling distributions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Dist {
    Uniform(Rat, Rat),
    /// Finite support: (value, probability) pairs.
    Discrete(Vec<(Rat, Rat)>),
}

impl Dist {
    /// Smallest and largest point of the support.
    pub fn support(&self) -> (Rat, Rat) {
        match self {
            Dist::Uniform(a, b) => (a.clone(), b.clone()),
            Dist::Discrete(pts) => {
                let lo = pts.iter().map(|(v, _)| v).min().cloned().unwrap_or_else(Rat::zero);
                let hi = pts.iter().map(|(v, _)| v).max().cloned().unwrap_or_else(Rat::zero);
                (lo, hi)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Skip,
    Tick(Rat),
    Assign(String, Expr),
    Sample(String, Dist),
    Call(String),
    While(Cond, Box<Stmt>),
    Prob(Rat, Box<Stmt>, Box<Stmt>),
    If(Cond, Box<Stmt>, Box<Stmt>),
    Seq(Box<Stmt>, Box<Stmt>),
}

impl Stmt {
    pub fn seq(a: Stmt, b: Stmt) -> Stmt {
        Stmt::Seq(Box::new(a), Box::new(b))
    }
    /// Right-nested sequence of the given statements (`skip` when empty).
    pub fn seq_all(mut items: Vec<Stmt>) -> Stmt {
        let mut acc = match items.pop() {
            Some(s) => s,
            None => return Stmt::Skip,
        };
        while let Some(s) = items.pop() {
            acc = Stmt::seq(s, acc);
        }
        acc
    }
    pub fn while_(c: Cond, body: Stmt) -> Stmt {
        Stmt::While(c, Box::new(body))
    }
    pub fn prob(p: Rat, a: Stmt, b: Stmt) -> Stmt {
        Stmt::Prob(p, Box::new(a), Box::new(b))
    }
    pub fn if_(c: Cond, a: Stmt, b: Stmt) -> Stmt {
        Stmt::If(c, Box::new(a), Box::new(b))
    }

    /// Visits every statement node in preorder.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        match self {
            Stmt::While(_, b) => b.visit(f),
            Stmt::Prob(_, a, b) | Stmt::If(_, a, b) | Stmt::Seq(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        self.visit(&mut |s| match s {
            Stmt::Assign(x, e) => {
                out.insert(x.clone());
                e.collect_vars(out);
            }
            Stmt::Sample(x, _) => {
                out.insert(x.clone());
            }
            Stmt::While(c, _) | Stmt::If(c, _, _) => c.collect_vars(out),
            _ => {}
        });
    }

    pub fn callees(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |s| {
            if let Stmt::Call(f) = s {
                out.insert(f.clone());
            }
        });
        out
    }

    /// Variables written by this statement (not following calls).
    pub fn written_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |s| match s {
            Stmt::Assign(x, _) | Stmt::Sample(x, _) => {
                out.insert(x.clone());
            }
            _ => {}
        });
        out
    }

    pub fn has_negative_tick(&self) -> bool {
        let mut neg = false;
        self.visit(&mut |s| {
            if let Stmt::Tick(c) = s {
                if *c < Rat::zero() {
                    neg = true;
                }
            }
        });
        neg
    }
}

/// A parsed APPL program: the function map, the main body, the variable set,
/// the declared precondition and the variables declared integer-valued.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub decls: IndexMap<String, Stmt>,
    pub main: Stmt,
    pub vars: Vec<String>,
    pub pre: Cond,
    pub ints: BTreeSet<String>,
}

impl Program {
    /// Builds a program and computes its variable set.
    pub fn new(decls: IndexMap<String, Stmt>, main: Stmt, pre: Cond, ints: BTreeSet<String>) -> Program {
        let mut vars = BTreeSet::new();
        main.collect_vars(&mut vars);
        for body in decls.values() {
            body.collect_vars(&mut vars);
        }
        pre.collect_vars(&mut vars);
        vars.extend(ints.iter().cloned());
        Program { decls, main, vars: vars.into_iter().collect(), pre, ints }
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn body(&self, f: &str) -> Option<&Stmt> {
        self.decls.get(f)
    }

    pub fn has_negative_tick(&self) -> bool {
        self.main.has_negative_tick() || self.decls.values().any(|b| b.has_negative_tick())
    }

    /// Variables written by `f`, transitively through its callees.
    pub fn modified_by(&self, f: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![f.to_string()];
        let mut out = BTreeSet::new();
        while let Some(g) = stack.pop() {
            if !seen.insert(g.clone()) {
                continue;
            }
            if let Some(b) = self.decls.get(&g) {
                out.extend(b.written_vars());
                stack.extend(b.callees());
            }
        }
        out
    }
}
