use crate::num::{fmt_rat, Rat};
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Index of an LP unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LpVar(pub u32);

/// `c + Σ a_j · q_j` over LP unknowns; zero entries are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Default, Hash)]
pub struct AffineForm {
    pub constant: Rat,
    pub terms: BTreeMap<LpVar, Rat>,
}

impl AffineForm {
    pub fn zero() -> Self {
        AffineForm::default()
    }
    pub fn constant(c: Rat) -> Self {
        AffineForm { constant: c, terms: BTreeMap::new() }
    }
    pub fn var(v: LpVar) -> Self {
        AffineForm { constant: Rat::zero(), terms: BTreeMap::from([(v, Rat::one())]) }
    }
    pub fn term(v: LpVar, c: Rat) -> Self {
        let mut a = AffineForm::zero();
        a.add_term(v, &c);
        a
    }
    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.terms.is_empty()
    }
    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn add_term(&mut self, v: LpVar, c: &Rat) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(v).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&v);
        }
    }
    pub fn add_assign(&mut self, o: &AffineForm) {
        self.constant += &o.constant;
        for (v, c) in &o.terms {
            self.add_term(*v, c);
        }
    }
    /// `self += k · o`
    pub fn add_scaled(&mut self, o: &AffineForm, k: &Rat) {
        if k.is_zero() {
            return;
        }
        self.constant += &o.constant * k;
        for (v, c) in &o.terms {
            self.add_term(*v, &(c * k));
        }
    }
    pub fn add(&self, o: &AffineForm) -> AffineForm {
        let mut r = self.clone();
        r.add_assign(o);
        r
    }
    pub fn sub(&self, o: &AffineForm) -> AffineForm {
        let mut r = self.clone();
        r.add_scaled(o, &-Rat::one());
        r
    }
    pub fn scale(&self, k: &Rat) -> AffineForm {
        if k.is_zero() {
            return AffineForm::zero();
        }
        AffineForm {
            constant: &self.constant * k,
            terms: self.terms.iter().map(|(v, c)| (*v, c * k)).collect(),
        }
    }
    pub fn coeff(&self, v: LpVar) -> Rat {
        self.terms.get(&v).cloned().unwrap_or_else(Rat::zero)
    }
    /// Evaluates under an assignment of the LP unknowns (missing ones are 0).
    pub fn eval(&self, assign: &dyn Fn(LpVar) -> Rat) -> Rat {
        let mut acc = self.constant.clone();
        for (v, c) in &self.terms {
            acc += c * assign(*v);
        }
        acc
    }
    pub fn render(&self, name: &dyn Fn(LpVar) -> String) -> String {
        let mut parts = Vec::new();
        for (v, c) in &self.terms {
            parts.push(format!("{} {}", fmt_rat(c), name(*v)));
        }
        if !self.constant.is_zero() || parts.is_empty() {
            parts.push(fmt_rat(&self.constant));
        }
        parts.join(" + ")
    }
}

impl fmt::Display for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&|v| format!("q{}", v.0)))
    }
}
