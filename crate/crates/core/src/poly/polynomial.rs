use super::affine::AffineForm;
use super::monomial::Monomial;
use crate::num::{fmt_rat, pow, to_f64, Rat};
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

/// Polynomial coefficients: exact rationals or affine forms over LP unknowns.
pub trait Coeff: Clone + std::fmt::Debug + PartialEq {
    fn zero_coeff() -> Self;
    fn is_zero_coeff(&self) -> bool;
    fn add_assign(&mut self, o: &Self);
    fn add_scaled(&mut self, o: &Self, k: &Rat);
    fn scale(&self, k: &Rat) -> Self;
    fn from_rat(r: Rat) -> Self;
}

impl Coeff for Rat {
    fn zero_coeff() -> Self {
        <Rat as Zero>::zero()
    }
    fn is_zero_coeff(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_assign(&mut self, o: &Self) {
        *self += o;
    }
    fn add_scaled(&mut self, o: &Self, k: &Rat) {
        *self += o * k;
    }
    fn scale(&self, k: &Rat) -> Self {
        self * k
    }
    fn from_rat(r: Rat) -> Self {
        r
    }
}

impl Coeff for AffineForm {
    fn zero_coeff() -> Self {
        AffineForm::zero()
    }
    fn is_zero_coeff(&self) -> bool {
        AffineForm::is_zero(self)
    }
    fn add_assign(&mut self, o: &Self) {
        AffineForm::add_assign(self, o)
    }
    fn add_scaled(&mut self, o: &Self, k: &Rat) {
        AffineForm::add_scaled(self, o, k)
    }
    fn scale(&self, k: &Rat) -> Self {
        AffineForm::scale(self, k)
    }
    fn from_rat(r: Rat) -> Self {
        AffineForm::constant(r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("variable with index {0} has no value")]
    MissingVariable(usize),
    #[error("not enough moments: need E[x^{needed}], have up to {have}")]
    InsufficientMoments { needed: u32, have: usize },
    #[error("degree cap {cap} exceeded by monomial {monomial}")]
    DegreeOverflow { cap: u32, monomial: String },
}

/// Sparse multivariate polynomial `Σ c_m · m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<C> {
    terms: BTreeMap<Monomial, C>,
}

pub type RatPoly = Polynomial<Rat>;
pub type SymPoly = Polynomial<AffineForm>;

impl<C: Coeff> Default for Polynomial<C> {
    fn default() -> Self {
        Polynomial { terms: BTreeMap::new() }
    }
}

impl<C: Coeff> Polynomial<C> {
    pub fn zero() -> Self {
        Self::default()
    }
    pub fn constant(c: C) -> Self {
        Self::monomial(Monomial::one(), c)
    }
    pub fn monomial(m: Monomial, c: C) -> Self {
        let mut p = Self::zero();
        p.add_term(m, &c);
        p
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn coeff(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero_coeff)
    }
    pub fn add_term(&mut self, m: Monomial, c: &C) {
        if c.is_zero_coeff() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(e) => {
                e.add_assign(c);
                if e.is_zero_coeff() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }
    fn add_term_scaled(&mut self, m: Monomial, c: &C, k: &Rat) {
        if k.is_zero() || c.is_zero_coeff() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(e) => {
                e.add_scaled(c, k);
                if e.is_zero_coeff() {
                    self.terms.remove(&m);
                }
            }
            None => {
                let v = c.scale(k);
                if !v.is_zero_coeff() {
                    self.terms.insert(m, v);
                }
            }
        }
    }
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }
    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        r.add_assign(o);
        r
    }
    pub fn add_assign(&mut self, o: &Self) {
        for (m, c) in &o.terms {
            self.add_term(m.clone(), c);
        }
    }
    pub fn add_scaled(&mut self, o: &Self, k: &Rat) {
        for (m, c) in &o.terms {
            self.add_term_scaled(m.clone(), c, k);
        }
    }
    pub fn sub(&self, o: &Self) -> Self {
        let mut r = self.clone();
        r.add_scaled(o, &-Rat::one());
        r
    }
    pub fn neg(&self) -> Self {
        self.scale(&-Rat::one())
    }
    pub fn scale(&self, k: &Rat) -> Self {
        let mut r = Self::zero();
        r.add_scaled(self, k);
        r
    }
    /// Product with a rational-coefficient polynomial.
    pub fn mul_rat(&self, o: &RatPoly) -> Self {
        let mut r = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                r.add_term_scaled(ma.mul(mb), ca, cb);
            }
        }
        r
    }
    /// Evaluation at a valuation indexed by variable.
    pub fn eval(&self, val: &[Rat]) -> Result<C, PolyError> {
        let mut acc = C::zero_coeff();
        for (m, c) in &self.terms {
            let mut w = Rat::one();
            for (v, e) in m.factors() {
                let x = val.get(v).ok_or(PolyError::MissingVariable(v))?;
                w *= pow(x, e);
            }
            acc.add_scaled(c, &w);
        }
        Ok(acc)
    }
    /// Composition `p[x ↦ e]`.
    pub fn subst(&self, x: usize, e: &RatPoly) -> Self {
        let max_e = self.terms.keys().map(|m| m.exponent(x)).max().unwrap_or(0);
        if max_e == 0 {
            return self.clone();
        }
        let mut powers: Vec<RatPoly> = vec![RatPoly::constant(Rat::one())];
        for j in 1..=max_e as usize {
            let next = powers[j - 1].mul_rat(e);
            powers.push(next);
        }
        let mut r = Self::zero();
        for (m, c) in &self.terms {
            let (rest, j) = m.split(x);
            if j == 0 {
                r.add_term(rest, c);
                continue;
            }
            for (pm, pc) in &powers[j as usize].terms {
                r.add_term_scaled(rest.mul(pm), c, pc);
            }
        }
        r
    }
    /// Replaces each `x^i` by `moments[i]`.
    pub fn expect(&self, x: usize, moments: &[Rat]) -> Result<Self, PolyError> {
        let mut r = Self::zero();
        for (m, c) in &self.terms {
            let (rest, j) = m.split(x);
            let mj = moments
                .get(j as usize)
                .ok_or(PolyError::InsufficientMoments { needed: j, have: moments.len().saturating_sub(1) })?;
            r.add_term_scaled(rest, c, mj);
        }
        Ok(r)
    }
    pub fn check_degree(&self, cap: u32, names: &[String]) -> Result<(), PolyError> {
        match self.terms.keys().find(|m| m.degree() > cap) {
            Some(m) => Err(PolyError::DegreeOverflow { cap, monomial: m.render(names) }),
            None => Ok(()),
        }
    }
    pub fn vars(&self) -> std::collections::BTreeSet<usize> {
        self.terms.keys().flat_map(|m| m.vars().collect::<Vec<_>>()).collect()
    }
    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        let mut r = Polynomial::<D>::zero();
        for (m, c) in &self.terms {
            r.add_term(m.clone(), &f(c));
        }
        r
    }
}

impl RatPoly {
    pub fn var(v: usize) -> Self {
        RatPoly::monomial(Monomial::var(v), Rat::one())
    }
    pub fn from_rat(r: Rat) -> Self {
        RatPoly::constant(r)
    }
    pub fn mul(&self, o: &RatPoly) -> RatPoly {
        self.mul_rat(o)
    }
    pub fn pow(&self, e: u32) -> RatPoly {
        let mut acc = RatPoly::constant(Rat::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }
    pub fn eval_f64(&self, val: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let w: f64 = m.factors().map(|(v, e)| val[v].powi(e as i32)).product();
                to_f64(c) * w
            })
            .sum()
    }
    /// Human-readable rendering, e.g. `4*d^2 + 22*d + 28`.
    pub fn render(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = *c < Rat::zero();
            let a = if neg { -c.clone() } else { c.clone() };
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if m.is_one() {
                out.push_str(&fmt_rat(&a));
            } else if a.is_one() {
                out.push_str(&m.render(names));
            } else {
                out.push_str(&format!("{}*{}", fmt_rat(&a), m.render(names)));
            }
        }
        out
    }
    /// JSON map `{monomial: coefficient}`; integers are emitted as integers.
    pub fn to_json(&self, names: &[String]) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (m, c) in &self.terms {
            map.insert(m.render(names), rat_to_json(c));
        }
        serde_json::Value::Object(map)
    }
}

impl SymPoly {
    /// Substitutes values for the LP unknowns.
    pub fn instantiate(&self, assign: &dyn Fn(super::affine::LpVar) -> Rat) -> RatPoly {
        let mut r = RatPoly::zero();
        for (m, c) in &self.terms {
            r.add_term(m.clone(), &c.eval(assign));
        }
        r
    }
    pub fn from_rat_poly(p: &RatPoly) -> SymPoly {
        p.map_coeffs(|c| AffineForm::constant(c.clone()))
    }
}

pub fn rat_to_json(c: &Rat) -> serde_json::Value {
    if c.is_integer() {
        if let Ok(i) = i64::try_from(c.numer().clone()) {
            return serde_json::Value::from(i);
        }
    }
    serde_json::Value::from(to_f64(c))
}
