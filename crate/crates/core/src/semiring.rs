//! Partially ordered semirings and the m-th order moment semiring.
//!
//! A moment vector `⟨u_0, …, u_m⟩` over a semiring `R` combines with
//! `⊕` (pointwise addition) and composes with the binomial convolution
//! `(u ⊗ v)_k = Σ_{i=0..k} C(k,i) · u_i · v_{k-i}`.

use crate::num::{ExtRat, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::fmt;
use thiserror::Error;

/// Carrier of a partially ordered semiring.
pub trait OrderedSemiring: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// The partial order `self ≤ other`.
    fn le(&self, other: &Self) -> bool;

    /// `n × u`, the n-fold sum of `u`, computed by binary doubling.
    fn nat_mul(n: &BigInt, u: &Self) -> Self {
        let mut acc = Self::zero();
        let mut base = u.clone();
        let mut k = n.clone();
        let two = BigInt::from(2);
        while k.is_positive() {
            if (&k % &two).is_one() {
                acc = acc.add(&base);
            }
            base = base.add(&base);
            k /= &two;
        }
        acc
    }
}

impl OrderedSemiring for Rat {
    fn zero() -> Self {
        <Rat as Zero>::zero()
    }
    fn one() -> Self {
        <Rat as One>::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn le(&self, other: &Self) -> bool {
        self <= other
    }
    fn nat_mul(n: &BigInt, u: &Self) -> Self {
        Rat::from_integer(n.clone()) * u
    }
}

/// Closed interval `[lo, hi]` with extended-rational endpoints, ordered by containment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: ExtRat,
    pub hi: ExtRat,
}

impl Interval {
    /// Builds `[lo, hi]`; returns `None` when `lo > hi`.
    pub fn new(lo: ExtRat, hi: ExtRat) -> Option<Interval> {
        if lo <= hi {
            Some(Interval { lo, hi })
        } else {
            None
        }
    }
    pub fn point(r: Rat) -> Interval {
        Interval { lo: ExtRat::Fin(r.clone()), hi: ExtRat::Fin(r) }
    }
    pub fn of(lo: Rat, hi: Rat) -> Interval {
        Interval::new(ExtRat::Fin(lo), ExtRat::Fin(hi)).expect("lo <= hi")
    }
    pub fn top() -> Interval {
        Interval { lo: ExtRat::NegInf, hi: ExtRat::PosInf }
    }
    pub fn contains(&self, x: &Rat) -> bool {
        let x = ExtRat::Fin(x.clone());
        self.lo <= x && x <= self.hi
    }
    pub fn is_bounded(&self) -> bool {
        self.lo.finite().is_some() && self.hi.finite().is_some()
    }
    pub fn neg(&self) -> Interval {
        Interval { lo: self.hi.neg(), hi: self.lo.neg() }
    }
    pub fn sub(&self, o: &Interval) -> Interval {
        self.add(&o.neg())
    }
    pub fn pow(&self, e: u32) -> Interval {
        let mut acc = <Interval as OrderedSemiring>::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        if e % 2 == 0 && e > 0 {
            // Even powers are nonnegative; the product rule alone may miss that.
            let zero = ExtRat::zero();
            if self.lo <= zero && zero <= self.hi {
                acc.lo = zero;
            }
        }
        acc
    }
}

impl OrderedSemiring for Interval {
    fn zero() -> Self {
        Interval::point(<Rat as Zero>::zero())
    }
    fn one() -> Self {
        Interval::point(<Rat as One>::one())
    }
    fn add(&self, o: &Self) -> Self {
        Interval { lo: self.lo.add(&o.lo), hi: self.hi.add(&o.hi) }
    }
    /// `[min S, max S]` over the four endpoint products, with `0 · ∞ = 0`.
    fn mul(&self, o: &Self) -> Self {
        let s = [self.lo.mul(&o.lo), self.lo.mul(&o.hi), self.hi.mul(&o.lo), self.hi.mul(&o.hi)];
        let lo = s.iter().min().cloned().expect("four products");
        let hi = s.iter().max().cloned().expect("four products");
        Interval { lo, hi }
    }
    /// Containment: `[a,b] ≤ [c,d]` iff `c ≤ a` and `b ≤ d`.
    fn le(&self, o: &Self) -> bool {
        o.lo <= self.lo && self.hi <= o.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Element of `[0, +∞]` with the usual order; the carrier of the
/// termination analysis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NonnegUpper(ExtRat);

impl NonnegUpper {
    /// Returns `None` for negative input.
    pub fn new(v: ExtRat) -> Option<NonnegUpper> {
        if v >= ExtRat::zero() {
            Some(NonnegUpper(v))
        } else {
            None
        }
    }
    pub fn infinity() -> NonnegUpper {
        NonnegUpper(ExtRat::PosInf)
    }
    pub fn value(&self) -> &ExtRat {
        &self.0
    }
}

impl OrderedSemiring for NonnegUpper {
    fn zero() -> Self {
        NonnegUpper(ExtRat::zero())
    }
    fn one() -> Self {
        NonnegUpper(ExtRat::one())
    }
    fn add(&self, o: &Self) -> Self {
        NonnegUpper(self.0.add(&o.0))
    }
    fn mul(&self, o: &Self) -> Self {
        NonnegUpper(self.0.mul(&o.0))
    }
    fn le(&self, o: &Self) -> bool {
        self.0 <= o.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("moment vectors of different order: {0} vs {1}")]
pub struct LengthMismatch(pub usize, pub usize);

/// Binomial coefficients `C(k, i)` for `0 ≤ i ≤ k ≤ m`, exact.
pub fn binomials(m: usize) -> Vec<Vec<BigInt>> {
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let mut row = vec![BigInt::one(); k + 1];
        for i in 1..k {
            row[i] = &rows[k - 1][i - 1] + &rows[k - 1][i];
        }
        rows.push(row);
    }
    rows
}

/// Element `⟨u_0, …, u_m⟩` of the m-th order moment semiring over `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector<R> {
    pub comps: Vec<R>,
}

impl<R: OrderedSemiring> MomentVector<R> {
    pub fn new(comps: Vec<R>) -> Self {
        assert!(!comps.is_empty(), "a moment vector has at least one component");
        MomentVector { comps }
    }
    pub fn order(&self) -> usize {
        self.comps.len() - 1
    }
    /// `0̲ = ⟨0, …, 0⟩`.
    pub fn zero(m: usize) -> Self {
        MomentVector { comps: vec![R::zero(); m + 1] }
    }
    /// `1̲ = ⟨1, 0, …, 0⟩`.
    pub fn one(m: usize) -> Self {
        let mut comps = vec![R::zero(); m + 1];
        comps[0] = R::one();
        MomentVector { comps }
    }
    /// `⟨c^0, c^1, …, c^m⟩`.
    pub fn of_scalar(c: &R, m: usize) -> Self {
        let mut comps = Vec::with_capacity(m + 1);
        let mut acc = R::one();
        for _ in 0..=m {
            comps.push(acc.clone());
            acc = acc.mul(c);
        }
        MomentVector { comps }
    }
    /// `⊕`: componentwise addition.
    pub fn combine(&self, o: &Self) -> Result<Self, LengthMismatch> {
        if self.comps.len() != o.comps.len() {
            return Err(LengthMismatch(self.order(), o.order()));
        }
        Ok(MomentVector { comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.add(b)).collect() })
    }
    /// `⊗`: binomial convolution.
    pub fn compose(&self, o: &Self) -> Result<Self, LengthMismatch> {
        if self.comps.len() != o.comps.len() {
            return Err(LengthMismatch(self.order(), o.order()));
        }
        let m = self.order();
        let binom = binomials(m);
        let mut comps = Vec::with_capacity(m + 1);
        for k in 0..=m {
            let mut acc = R::zero();
            for i in 0..=k {
                let prod = self.comps[i].mul(&o.comps[k - i]);
                acc = acc.add(&R::nat_mul(&binom[k][i], &prod));
            }
            comps.push(acc);
        }
        Ok(MomentVector { comps })
    }
    /// The order `⊑`: componentwise `le`.
    pub fn le(&self, o: &Self) -> bool {
        self.comps.len() == o.comps.len() && self.comps.iter().zip(&o.comps).all(|(a, b)| a.le(b))
    }
}

impl<R: fmt::Display> fmt::Display for MomentVector<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨")?;
        for (i, c) in self.comps.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "⟩")
    }
}
