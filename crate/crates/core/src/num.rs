//! Exact rational helpers and extended rationals with infinite sentinels.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

/// Exact rational number used throughout the symbolic layers.
pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Very large numerators or denominators: divide in floating point.
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Exact conversion of a finite float into a rational.
pub fn from_f64(x: f64) -> Rat {
    Rat::from_float(x).unwrap_or_else(Rat::zero)
}

pub fn pow(r: &Rat, e: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..e {
        acc *= r;
    }
    acc
}

/// Parses `12`, `-3`, `0.25`, `-1.5e-3` (no exponent support needed) or `p/q`.
pub fn parse_rat(text: &str) -> Option<Rat> {
    let t = text.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p = parse_rat(p)?;
        let q = parse_rat(q)?;
        if q.is_zero() {
            return None;
        }
        return Some(p / q);
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    if body.is_empty() {
        return None;
    }
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    let r = Rat::new(num, den);
    Some(if neg { -r } else { r })
}

/// Human-readable form: integers print bare, other values as `p/q`.
pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Best rational approximation with bounded denominator (continued fractions).
pub fn approx_rat(x: f64, max_den: i64) -> Rat {
    if !x.is_finite() {
        return Rat::zero();
    }
    let neg = x < 0.0;
    let mut v = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    for _ in 0..64 {
        let a = v.floor();
        if a > 1e18 {
            break;
        }
        let ai = a as i128;
        let p2 = ai * p1 + p0;
        let q2 = ai * q1 + q0;
        if q2 > max_den as i128 {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = v - a;
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    if q1 == 0 {
        return from_f64(x);
    }
    let r = Rat::new(BigInt::from(p1), BigInt::from(q1));
    if neg {
        -r
    } else {
        r
    }
}

pub fn floor(r: &Rat) -> Rat {
    Rat::from_integer(r.numer().div_floor(r.denom()))
}

pub fn ceil(r: &Rat) -> Rat {
    -floor(&-r)
}

/// Least common multiple of the denominators and gcd of numerators, used to
/// scale a rational vector to coprime integers.
pub fn integer_scale(coeffs: &[&Rat]) -> Rat {
    let mut l = BigInt::one();
    for c in coeffs {
        l = l.lcm(c.denom());
    }
    let mut g = BigInt::zero();
    for c in coeffs {
        let n = (*c * Rat::from_integer(l.clone())).to_integer();
        g = g.gcd(&n);
    }
    if g.is_zero() {
        Rat::one()
    } else {
        Rat::new(l, g.abs())
    }
}

/// Extended rational: a finite value or one of the two infinities.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtRat {
    NegInf,
    Fin(Rat),
    PosInf,
}

impl ExtRat {
    pub fn zero() -> Self {
        ExtRat::Fin(Rat::zero())
    }
    pub fn one() -> Self {
        ExtRat::Fin(Rat::one())
    }
    pub fn fin(n: i64) -> Self {
        ExtRat::Fin(rat(n))
    }
    pub fn is_zero(&self) -> bool {
        matches!(self, ExtRat::Fin(r) if r.is_zero())
    }
    pub fn finite(&self) -> Option<&Rat> {
        match self {
            ExtRat::Fin(r) => Some(r),
            _ => None,
        }
    }
    fn sign(&self) -> i8 {
        match self {
            ExtRat::NegInf => -1,
            ExtRat::PosInf => 1,
            ExtRat::Fin(r) => {
                if r.is_positive() {
                    1
                } else if r.is_negative() {
                    -1
                } else {
                    0
                }
            }
        }
    }
    pub fn neg(&self) -> Self {
        match self {
            ExtRat::NegInf => ExtRat::PosInf,
            ExtRat::PosInf => ExtRat::NegInf,
            ExtRat::Fin(r) => ExtRat::Fin(-r),
        }
    }
    /// Addition; `+∞ + −∞` is not produced by any caller and maps to `+∞`.
    pub fn add(&self, o: &Self) -> Self {
        match (self, o) {
            (ExtRat::Fin(a), ExtRat::Fin(b)) => ExtRat::Fin(a + b),
            (ExtRat::PosInf, _) | (_, ExtRat::PosInf) => ExtRat::PosInf,
            _ => ExtRat::NegInf,
        }
    }
    /// Multiplication with the convention `0 · ∞ = 0`.
    pub fn mul(&self, o: &Self) -> Self {
        match (self, o) {
            (ExtRat::Fin(a), ExtRat::Fin(b)) => ExtRat::Fin(a * b),
            _ => match self.sign() * o.sign() {
                0 => ExtRat::zero(),
                1 => ExtRat::PosInf,
                _ => ExtRat::NegInf,
            },
        }
    }
    pub fn to_f64(&self) -> f64 {
        match self {
            ExtRat::NegInf => f64::NEG_INFINITY,
            ExtRat::PosInf => f64::INFINITY,
            ExtRat::Fin(r) => to_f64(r),
        }
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtRat::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Fin(a), Fin(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::NegInf => write!(f, "-inf"),
            ExtRat::PosInf => write!(f, "+inf"),
            ExtRat::Fin(r) => write!(f, "{}", fmt_rat(r)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(parse_rat("0.6"), Some(ratio(3, 5)));
        assert_eq!(parse_rat("-1/2"), Some(ratio(-1, 2)));
        assert_eq!(parse_rat("12"), Some(rat(12)));
        assert_eq!(parse_rat(".5"), Some(ratio(1, 2)));
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(parse_rat("abc"), None);
    }

    #[test]
    fn extended_arithmetic() {
        assert_eq!(ExtRat::PosInf.mul(&ExtRat::zero()), ExtRat::zero());
        assert_eq!(ExtRat::NegInf.mul(&ExtRat::fin(-2)), ExtRat::PosInf);
        assert!(ExtRat::NegInf < ExtRat::fin(-100));
        assert_eq!(approx_rat(0.333333333333, 1000), ratio(1, 3));
    }
}
