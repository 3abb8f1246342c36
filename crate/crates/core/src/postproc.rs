//! Central-moment upper bounds from raw-moment intervals, and tail bounds
//! (Markov, Cantelli, Chebyshev) with CSV curve emission.

use crate::num::{pow, to_f64, Rat};
use crate::poly::RatPoly;
use crate::semiring::binomials;
use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PostprocError {
    #[error("central moment of order {k} needs raw moments up to {k}, only {m} available")]
    OrderTooHigh { k: usize, m: usize },
    #[error("Chebyshev bounds need an even central moment, got {0}")]
    OddOrder(usize),
}

/// Interval bounds on the raw moments, symbolic and evaluated at `γ₀`.
#[derive(Clone, Debug)]
pub struct MomentBounds {
    /// `lo[k]`, `hi[k]` for `k = 0..=m`.
    pub lo: Vec<RatPoly>,
    pub hi: Vec<RatPoly>,
    pub gamma0: Vec<Rat>,
    pub lo_val: Vec<Rat>,
    pub hi_val: Vec<Rat>,
}

impl MomentBounds {
    pub fn m(&self) -> usize {
        self.hi_val.len() - 1
    }
    /// Builds the numeric values by evaluation at `γ₀`.
    pub fn new(lo: Vec<RatPoly>, hi: Vec<RatPoly>, gamma0: Vec<Rat>) -> MomentBounds {
        let ev = |p: &RatPoly| p.eval(&gamma0).expect("valuation covers every variable");
        let lo_val = lo.iter().map(ev).collect();
        let hi_val = hi.iter().map(ev).collect();
        MomentBounds { lo, hi, gamma0, lo_val, hi_val }
    }
    /// Numeric-only bounds.
    pub fn numeric(lo_val: Vec<Rat>, hi_val: Vec<Rat>) -> MomentBounds {
        let lo = lo_val.iter().map(|v| RatPoly::from_rat(v.clone())).collect();
        let hi = hi_val.iter().map(|v| RatPoly::from_rat(v.clone())).collect();
        MomentBounds { lo, hi, gamma0: Vec::new(), lo_val, hi_val }
    }
}

/// An upper bound on a central moment at `γ₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralBound {
    pub k: usize,
    /// Exact when the maximum is attained at a box corner.
    pub exact: Option<Rat>,
    pub value: f64,
    /// `U₂ − L₁²` for `k = 2` when `L₁(γ₀) ≥ 0`.
    pub symbolic: Option<RatPoly>,
}

/// `Σ_j C(k,j)(−1)^{k−j} M_j μ^{k−j}` with `M_0 = 1`, `M_1 = μ`.
fn expansion(k: usize, mu: f64, ms: &[f64], binom: &[Vec<num_bigint::BigInt>]) -> f64 {
    let mut acc = 0.0;
    for j in 0..=k {
        let mj = match j {
            0 => 1.0,
            1 => mu,
            _ => ms[j],
        };
        let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
        let c = binom[k][j].to_string().parse::<f64>().unwrap_or(f64::INFINITY);
        acc += sign * c * mj * mu.powi((k - j) as i32);
    }
    acc
}

fn expansion_exact(k: usize, mu: &Rat, ms: &[Rat], binom: &[Vec<num_bigint::BigInt>]) -> Rat {
    let mut acc = Rat::zero();
    for j in 0..=k {
        let mj = match j {
            0 => Rat::from_integer(1.into()),
            1 => mu.clone(),
            _ => ms[j].clone(),
        };
        let term = Rat::from_integer(binom[k][j].clone()) * mj * pow(mu, (k - j) as u32);
        if (k - j) % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// Maximizes the binomial expansion of `E[(X − E[X])^k]` over the box of
/// raw-moment intervals. Raw moments of order `≥ 2` enter linearly and are
/// taken at their interval corners; the mean is scanned over its interval,
/// including interior critical points.
pub fn central_upper(b: &MomentBounds, k: usize) -> Result<CentralBound, PostprocError> {
    let m = b.m();
    if k > m || k < 2 {
        return Err(PostprocError::OrderTooHigh { k, m });
    }
    let binom = binomials(k);
    let (l1, u1) = (b.lo_val[1].clone(), b.hi_val[1].clone());
    let mut best_exact: Option<Rat> = None;
    let mut best = f64::NEG_INFINITY;
    let free = k - 1;
    for mask in 0..(1u32 << free) {
        let mut ms_exact = vec![Rat::zero(); k + 1];
        for j in 2..=k {
            ms_exact[j] = if mask & (1 << (j - 2)) != 0 { b.hi_val[j].clone() } else { b.lo_val[j].clone() };
        }
        for mu in [&l1, &u1] {
            let v = expansion_exact(k, mu, &ms_exact, &binom);
            if best_exact.as_ref().map(|b| v > *b).unwrap_or(true) {
                best_exact = Some(v);
            }
        }
        // Interior stationary points in the mean, located numerically.
        let ms: Vec<f64> = ms_exact.iter().map(to_f64).collect();
        let (a, z) = (to_f64(&l1), to_f64(&u1));
        if z > a {
            let n = 2000;
            let f = |x: f64| expansion(k, x, &ms, &binom);
            let mut prev = f(a);
            for i in 1..=n {
                let x = a + (z - a) * i as f64 / n as f64;
                let v = f(x);
                if v > best {
                    best = v;
                }
                prev = prev.max(v);
            }
            // Golden-section refinement around the grid maximum.
            let mut bx = a;
            let mut bv = f(a);
            for i in 0..=n {
                let x = a + (z - a) * i as f64 / n as f64;
                let v = f(x);
                if v > bv {
                    bv = v;
                    bx = x;
                }
            }
            let h = (z - a) / n as f64;
            let (mut lo, mut hi) = ((bx - h).max(a), (bx + h).min(z));
            let g = 0.618_033_988_749_895;
            for _ in 0..100 {
                let x1 = hi - g * (hi - lo);
                let x2 = lo + g * (hi - lo);
                if f(x1) < f(x2) {
                    lo = x1;
                } else {
                    hi = x2;
                }
            }
            best = best.max(f(0.5 * (lo + hi)));
        }
    }
    let exact = best_exact.expect("at least one corner");
    let ev = to_f64(&exact);
    let tol = 1e-12 * ev.abs().max(1.0);
    let (exact, value) = if best > ev + tol { (None, best) } else { (Some(exact), ev) };
    let symbolic = if k == 2 && !b.lo_val[1].is_negative() && b.hi.len() > 2 {
        Some(b.hi[2].sub(&b.lo[1].mul(&b.lo[1])))
    } else {
        None
    };
    Ok(CentralBound { k, exact, value, symbolic })
}

/// Markov: `P[X ≥ a] ≤ E[X^k] / a^k` for nonnegative `X`.
pub fn tail_markov(u_k: f64, a: f64, k: usize) -> Option<f64> {
    if a <= 0.0 {
        return None;
    }
    Some((u_k.max(0.0) / a.powi(k as i32)).clamp(0.0, 1.0))
}

/// Cantelli with the mean shifted by its upper bound: `P[X ≥ a_raw] ≤
/// V / (V + (a_raw − U₁)²)` when `a_raw > U₁`.
pub fn tail_cantelli(u1: f64, v_upper: f64, a_raw: f64) -> Option<f64> {
    let a = a_raw - u1;
    if a <= 0.0 {
        return None;
    }
    let v = v_upper.max(0.0);
    if v == 0.0 {
        return Some(0.0);
    }
    Some((v / (v + a * a)).clamp(0.0, 1.0))
}

/// Chebyshev with an even central moment: `P[|X − E[X]| ≥ a] ≤ C_{2k} / a^{2k}`.
pub fn tail_chebyshev(c_2k: f64, a: f64, two_k: usize) -> Result<Option<f64>, PostprocError> {
    if two_k % 2 != 0 {
        return Err(PostprocError::OddOrder(two_k));
    }
    if a <= 0.0 {
        return Ok(None);
    }
    Ok(Some((c_2k.max(0.0) / a.powi(two_k as i32)).clamp(0.0, 1.0)))
}

#[derive(Clone, Debug, Serialize)]
pub struct TailRow {
    pub a: f64,
    pub markov: Vec<Option<f64>>,
    pub cantelli: Option<f64>,
    pub chebyshev4: Option<f64>,
    pub min: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailCurve {
    pub m: usize,
    pub rows: Vec<TailRow>,
}

/// Inputs of a tail curve, all evaluated at `γ₀`.
#[derive(Clone, Debug)]
pub struct TailInputs {
    /// `U_k` for `k = 1..=m`.
    pub upper: Vec<f64>,
    /// Markov needs a nonnegative cost.
    pub nonneg_cost: bool,
    pub variance_upper: Option<f64>,
    pub central4_upper: Option<f64>,
}

impl TailInputs {
    pub fn from_bounds(b: &MomentBounds, nonneg_cost: bool) -> TailInputs {
        let m = b.m();
        let central = |k: usize| central_upper(b, k).ok().map(|c| c.value);
        TailInputs {
            upper: (1..=m).map(|k| to_f64(&b.hi_val[k])).collect(),
            nonneg_cost,
            variance_upper: if m >= 2 { central(2) } else { None },
            central4_upper: if m >= 4 { central(4) } else { None },
        }
    }

    pub fn row(&self, a: f64) -> TailRow {
        let markov: Vec<Option<f64>> = self
            .upper
            .iter()
            .enumerate()
            .map(|(i, u)| if self.nonneg_cost { tail_markov(*u, a, i + 1) } else { None })
            .collect();
        let u1 = self.upper.first().copied().unwrap_or(0.0);
        let cantelli = self.variance_upper.and_then(|v| tail_cantelli(u1, v, a));
        let chebyshev4 = self.central4_upper.and_then(|c| tail_chebyshev(c, a - u1, 4).ok().flatten());
        let min = markov
            .iter()
            .flatten()
            .chain(cantelli.iter())
            .chain(chebyshev4.iter())
            .copied()
            .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |y| y.min(x))));
        TailRow { a, markov, cantelli, chebyshev4, min }
    }
}

/// One row per threshold `start, start + step, ...` up to `stop` inclusive.
pub fn tail_curve(inputs: &TailInputs, start: f64, stop: f64, step: f64) -> TailCurve {
    let mut rows = Vec::new();
    let mut i = 0u64;
    loop {
        let a = start + step * i as f64;
        if a > stop + 1e-9 * step.abs().max(1.0) {
            break;
        }
        rows.push(inputs.row(a));
        i += 1;
        if step <= 0.0 {
            break;
        }
    }
    TailCurve { m: inputs.upper.len(), rows }
}

impl TailCurve {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["a".to_string()];
        header.extend((1..=self.m).map(|k| format!("markov{k}")));
        header.extend(["cantelli".to_string(), "chebyshev4".to_string(), "min".to_string()]);
        w.write_record(&header).expect("in-memory write");
        let cell = |x: &Option<f64>| x.map(|v| format!("{v}")).unwrap_or_default();
        for r in &self.rows {
            let mut rec = vec![format!("{}", r.a)];
            rec.extend(r.markov.iter().map(cell));
            rec.push(cell(&r.cantelli));
            rec.push(cell(&r.chebyshev4));
            rec.push(cell(&r.min));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, ratio};

    #[test]
    fn variance_is_u2_minus_l1_squared() {
        let b = MomentBounds::numeric(vec![rat(1), rat(20), rat(400)], vec![rat(1), rat(24), rat(648)]);
        let c = central_upper(&b, 2).unwrap();
        assert_eq!(c.exact, Some(rat(248)));
    }

    #[test]
    fn degenerate_cost_has_zero_variance() {
        let b = MomentBounds::numeric(vec![rat(1), rat(3), rat(9)], vec![rat(1), rat(3), rat(9)]);
        assert_eq!(central_upper(&b, 2).unwrap().exact, Some(rat(0)));
    }

    #[test]
    fn cantelli_at_fifteen() {
        let v = tail_cantelli(34.0, 358.0, 60.0).unwrap();
        assert!((v - 358.0 / 1034.0).abs() < 1e-12);
        assert_eq!(tail_cantelli(34.0, 358.0, 30.0), None);
        let _ = ratio(1, 2);
    }

    #[test]
    fn csv_header() {
        let inputs = TailInputs { upper: vec![1.0, 2.0], nonneg_cost: true, variance_upper: Some(1.0), central4_upper: None };
        let csv = tail_curve(&inputs, 1.0, 1.0, 1.0).to_csv();
        assert!(csv.starts_with("a,markov1,markov2,cantelli,chebyshev4,min\n"));
        assert_eq!(csv.lines().count(), 2);
    }
}
