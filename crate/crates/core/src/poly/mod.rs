//! Multivariate polynomials with rational or symbolic (LP-affine)
//! coefficients, symbolic intervals and potential-annotation templates.

mod affine;
mod monomial;
mod polynomial;

pub use affine::{AffineForm, LpVar};
pub use monomial::Monomial;
pub use polynomial::{rat_to_json, Coeff, PolyError, Polynomial, RatPoly, SymPoly};

use crate::lang::Dist;
use crate::num::{pow, Rat};
use crate::semiring::binomials;
use num_bigint::BigInt;
use num_traits::{One, Zero};

/// `E[x^i]` for `i = 0..=up_to` under the distribution.
pub fn dist_raw_moments(d: &Dist, up_to: u32) -> Vec<Rat> {
    (0..=up_to)
        .map(|i| match d {
            Dist::Uniform(a, b) => {
                let n = Rat::from_integer(BigInt::from(i + 1));
                (pow(b, i + 1) - pow(a, i + 1)) / (n * (b - a))
            }
            Dist::Discrete(pts) => pts.iter().map(|(v, p)| p * pow(v, i)).sum(),
        })
        .collect()
}

/// An interval whose endpoints are polynomials, read pointwise under a context.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicInterval<C> {
    pub lo: Polynomial<C>,
    pub hi: Polynomial<C>,
}

impl<C: Coeff> SymbolicInterval<C> {
    pub fn zero() -> Self {
        SymbolicInterval { lo: Polynomial::zero(), hi: Polynomial::zero() }
    }
    pub fn point(c: C) -> Self {
        SymbolicInterval { lo: Polynomial::constant(c.clone()), hi: Polynomial::constant(c) }
    }
    pub fn add(&self, o: &Self) -> Self {
        SymbolicInterval { lo: self.lo.add(&o.lo), hi: self.hi.add(&o.hi) }
    }
    /// Multiplication by the point interval `[k, k]`.
    pub fn scale(&self, k: &Rat) -> Self {
        if *k >= Rat::zero() {
            SymbolicInterval { lo: self.lo.scale(k), hi: self.hi.scale(k) }
        } else {
            SymbolicInterval { lo: self.hi.scale(k), hi: self.lo.scale(k) }
        }
    }
    pub fn map(&self, f: impl Fn(&Polynomial<C>) -> Polynomial<C>) -> Self {
        SymbolicInterval { lo: f(&self.lo), hi: f(&self.hi) }
    }
    pub fn try_map<E>(&self, f: impl Fn(&Polynomial<C>) -> Result<Polynomial<C>, E>) -> Result<Self, E> {
        Ok(SymbolicInterval { lo: f(&self.lo)?, hi: f(&self.hi)? })
    }
}

/// A moment vector of symbolic intervals, `⟨[L_k, U_k]⟩_{0≤k≤m}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Annotation<C> {
    pub comps: Vec<SymbolicInterval<C>>,
}

pub type SymAnnotation = Annotation<AffineForm>;
pub type RatAnnotation = Annotation<Rat>;

impl<C: Coeff> Annotation<C> {
    pub fn order(&self) -> usize {
        self.comps.len() - 1
    }
    pub fn zero(m: usize) -> Self {
        Annotation { comps: vec![SymbolicInterval::zero(); m + 1] }
    }
    /// `1̲ = ⟨[1,1],[0,0],...⟩`.
    pub fn one(m: usize) -> Self {
        let mut a = Self::zero(m);
        a.comps[0] = SymbolicInterval::point(C::from_rat(Rat::one()));
        a
    }
    /// A constant annotation from numeric components.
    pub fn constant(vals: &[Rat]) -> Self {
        Annotation { comps: vals.iter().map(|v| SymbolicInterval::point(C::from_rat(v.clone()))).collect() }
    }
    /// `⊕`: componentwise addition.
    pub fn combine(&self, o: &Self) -> Self {
        Annotation { comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.add(b)).collect() }
    }
    pub fn scale(&self, k: &Rat) -> Self {
        Annotation { comps: self.comps.iter().map(|c| c.scale(k)).collect() }
    }
    /// `⟨[c^k, c^k]⟩_k ⊗ self`.
    pub fn tick(&self, c: &Rat) -> Self {
        let m = self.order();
        let binom = binomials(m);
        let powers: Vec<Rat> = (0..=m as u32).map(|i| pow(c, i)).collect();
        let mut out = Vec::with_capacity(m + 1);
        for k in 0..=m {
            let mut acc = SymbolicInterval::zero();
            for i in 0..=k {
                let w = Rat::from_integer(binom[k][i].clone()) * &powers[i];
                if w.is_zero() {
                    continue;
                }
                acc = acc.add(&self.comps[k - i].scale(&w));
            }
            out.push(acc);
        }
        Annotation { comps: out }
    }
    pub fn map(&self, f: impl Fn(&Polynomial<C>) -> Polynomial<C>) -> Self {
        Annotation { comps: self.comps.iter().map(|c| c.map(&f)).collect() }
    }
    pub fn try_map<E>(&self, f: impl Fn(&Polynomial<C>) -> Result<Polynomial<C>, E>) -> Result<Self, E> {
        let comps = self.comps.iter().map(|c| c.try_map(&f)).collect::<Result<Vec<_>, E>>()?;
        Ok(Annotation { comps })
    }
    /// True when every component below `h` is `[0, 0]`.
    pub fn is_restricted(&self, h: usize) -> bool {
        self.comps.iter().take(h).all(|c| c.lo.is_zero() && c.hi.is_zero())
    }
}

impl SymAnnotation {
    pub fn instantiate(&self, assign: &dyn Fn(LpVar) -> Rat) -> RatAnnotation {
        Annotation {
            comps: self
                .comps
                .iter()
                .map(|c| SymbolicInterval { lo: c.lo.instantiate(assign), hi: c.hi.instantiate(assign) })
                .collect(),
        }
    }
    pub fn from_rat(a: &RatAnnotation) -> SymAnnotation {
        Annotation {
            comps: a
                .comps
                .iter()
                .map(|c| SymbolicInterval { lo: SymPoly::from_rat_poly(&c.lo), hi: SymPoly::from_rat_poly(&c.hi) })
                .collect(),
        }
    }
}

/// Which endpoint of a component a template unknown belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Lo,
    Hi,
}

/// Shape of a fresh template.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TemplateShape {
    pub m: usize,
    pub d: u32,
    /// Components below `h` are `[0, 0]`.
    pub h: usize,
    /// Fix component 0 to `[1, 1]` (top-level derivations with `h = 0`).
    pub unit_zeroth: bool,
    /// Only the upper endpoints are unknowns; lower endpoints are 0.
    pub upper_only: bool,
}

/// Allocates a template annotation. Component `k ≥ h` gets full polynomials of
/// degree `k·d` over `vars`, one fresh unknown per monomial and endpoint.
pub fn fresh_annotation(
    shape: TemplateShape,
    vars: &[usize],
    alloc: &mut dyn FnMut(usize, Side, &Monomial) -> LpVar,
) -> SymAnnotation {
    let mut a = SymAnnotation::zero(shape.m);
    for k in shape.h..=shape.m {
        if k == 0 && shape.unit_zeroth {
            a.comps[0] = SymbolicInterval::point(AffineForm::constant(Rat::one()));
            continue;
        }
        let monos = Monomial::all_up_to(vars, k as u32 * shape.d);
        let mut iv = SymbolicInterval::zero();
        for side in [Side::Lo, Side::Hi] {
            if side == Side::Lo && shape.upper_only {
                continue;
            }
            let mut p = SymPoly::zero();
            for mono in &monos {
                let v = alloc(k, side, mono);
                p.add_term(mono.clone(), &AffineForm::var(v));
            }
            match side {
                Side::Lo => iv.lo = p,
                Side::Hi => iv.hi = p,
            }
        }
        a.comps[k] = iv;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, ratio};

    #[test]
    fn raw_moments_of_distributions() {
        let u = Dist::Uniform(rat(-1), rat(2));
        assert_eq!(dist_raw_moments(&u, 3), vec![rat(1), ratio(1, 2), rat(1), ratio(5, 4)]);
        let point = Dist::Discrete(vec![(rat(0), rat(1))]);
        assert_eq!(dist_raw_moments(&point, 2), vec![rat(1), rat(0), rat(0)]);
        let unit = Dist::Uniform(rat(0), rat(1));
        assert_eq!(
            dist_raw_moments(&unit, 4),
            vec![rat(1), ratio(1, 2), ratio(1, 3), ratio(1, 4), ratio(1, 5)]
        );
    }

    fn counting_alloc() -> impl FnMut(usize, Side, &Monomial) -> LpVar {
        let mut n = 0;
        move |_, _, _| {
            n += 1;
            LpVar(n - 1)
        }
    }

    #[test]
    fn template_shapes() {
        let shape = TemplateShape { m: 2, d: 1, h: 0, unit_zeroth: false, upper_only: false };
        let a = fresh_annotation(shape, &[0, 1], &mut counting_alloc());
        assert_eq!(a.comps.len(), 3);
        assert_eq!(a.comps[1].lo.len(), 3);
        assert_eq!(a.comps[1].hi.len(), 3);
        assert_eq!(a.comps[2].hi.len(), 6);

        let shape = TemplateShape { m: 2, d: 1, h: 2, unit_zeroth: false, upper_only: false };
        let a = fresh_annotation(shape, &[0, 1], &mut counting_alloc());
        assert!(a.is_restricted(2));
        assert_eq!(a.comps[2].hi.degree(), 2);

        let shape = TemplateShape { m: 1, d: 0, h: 0, unit_zeroth: false, upper_only: false };
        let a = fresh_annotation(shape, &[0, 1], &mut counting_alloc());
        assert_eq!(a.comps[1].hi.len(), 1);
        assert_eq!(a.comps[1].hi.degree(), 0);
    }

    #[test]
    fn tick_composes_powers() {
        let post = RatAnnotation::one(2);
        let pre = post.tick(&rat(1));
        assert_eq!(pre, RatAnnotation::constant(&[rat(1), rat(1), rat(1)]));
        let neg = RatAnnotation::constant(&[rat(1), rat(0), rat(5)]);
        let mut post = neg.clone();
        post.comps[1] = SymbolicInterval { lo: RatPoly::from_rat(rat(-2)), hi: RatPoly::from_rat(rat(2)) };
        let pre = post.tick(&rat(-1));
        // ⟨[1,1],[-1,-1],[1,1]⟩ ⊗ ⟨[1,1],[-2,2],[5,5]⟩
        assert_eq!(pre.comps[1].lo, RatPoly::from_rat(rat(-3)));
        assert_eq!(pre.comps[1].hi, RatPoly::from_rat(rat(1)));
        assert_eq!(pre.comps[2].lo, RatPoly::from_rat(rat(2)));
        assert_eq!(pre.comps[2].hi, RatPoly::from_rat(rat(10)));
    }
}
