//! Property suites shared by `properties.rs` and the acceptance run. Each
//! suite takes its case count and reports the first counterexample.

#![allow(dead_code)]

use appl_moments::interp::{estimate_moments, valuation, SimulationConfig, DEFAULT_STEP_LIMIT};
use appl_moments::lang::Dist;
use appl_moments::lp::{solve, solve_exact, LpProblem, LpStatus, Relation, Sense, VarKind, VarPool};
use appl_moments::num::{rat, ratio, to_f64, Rat};
use appl_moments::pipeline::load_program;
use appl_moments::poly::{dist_raw_moments, AffineForm, Monomial, RatPoly};
use appl_moments::semiring::{Interval, MomentVector, OrderedSemiring};
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new(config).run(&strategy, test).map_err(|e| e.to_string())
}

/// Like [`run`], panicking on the first counterexample.
pub fn check_all<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) {
    if let Err(e) = run(cases, strategy, test) {
        panic!("{e}");
    }
}

pub fn small_rat() -> impl Strategy<Value = Rat> {
    (-12i64..=12, 1i64..=4).prop_map(|(n, d)| ratio(n, d))
}

fn rat_vector(len: usize) -> impl Strategy<Value = MomentVector<Rat>> {
    prop::collection::vec(small_rat(), len).prop_map(MomentVector::new)
}

pub fn interval() -> impl Strategy<Value = Interval> {
    (small_rat(), 0i64..=8, 1i64..=3).prop_map(|(lo, w, d)| {
        let hi = lo.clone() + ratio(w, d);
        Interval::of(lo, hi)
    })
}

/// An interval together with a containing one.
fn nested_interval() -> impl Strategy<Value = (Interval, Interval)> {
    (interval(), 0i64..=6, 0i64..=6).prop_map(|(a, l, r)| {
        let lo = a.lo.finite().expect("bounded").clone() - rat(l);
        let hi = a.hi.finite().expect("bounded").clone() + rat(r);
        (a, Interval::of(lo, hi))
    })
}

fn interval_vector(len: usize) -> impl Strategy<Value = MomentVector<Interval>> {
    prop::collection::vec(interval(), len).prop_map(MomentVector::new)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

/// Semiring laws of the moment semiring over exact rationals, the interval
/// carrier laws, and `⟨(u+v)^k⟩ = ⟨u^k⟩ ⊗ ⟨v^k⟩`.
pub fn semiring_laws(cases: u32) -> Result<(), String> {
    let strat = (1usize..=5).prop_flat_map(|len| (rat_vector(len), rat_vector(len), rat_vector(len)));
    run(cases, strat, |(a, b, c)| {
        let m = a.order();
        let ab_c = a.compose(&b).unwrap().compose(&c).unwrap();
        let a_bc = a.compose(&b.compose(&c).unwrap()).unwrap();
        check(ab_c == a_bc, || "⊗ not associative".into())?;
        check(a.combine(&b).unwrap() == b.combine(&a).unwrap(), || "⊕ not commutative".into())?;
        let l = a.compose(&b.combine(&c).unwrap()).unwrap();
        let r = a.compose(&b).unwrap().combine(&a.compose(&c).unwrap()).unwrap();
        check(l == r, || "left distributivity".into())?;
        let l = b.combine(&c).unwrap().compose(&a).unwrap();
        let r = b.compose(&a).unwrap().combine(&c.compose(&a).unwrap()).unwrap();
        check(l == r, || "right distributivity".into())?;
        check(a.compose(&MomentVector::one(m)).unwrap() == a, || "right identity".into())?;
        check(MomentVector::one(m).compose(&a).unwrap() == a, || "left identity".into())?;
        check(a.combine(&MomentVector::zero(m)).unwrap() == a, || "additive identity".into())?;
        check(MomentVector::zero(m).compose(&a).unwrap() == MomentVector::zero(m), || "absorption".into())?;
        Ok(())
    })?;
    run(cases, (interval(), interval(), interval()), |(a, b, c)| {
        check(a.mul(&b).mul(&c) == a.mul(&b.mul(&c)), || "interval · not associative".into())?;
        check(a.add(&b).add(&c) == a.add(&b.add(&c)), || "interval + not associative".into())?;
        check(a.mul(&b) == b.mul(&a), || "interval · not commutative".into())?;
        // Interval arithmetic is only subdistributive.
        check(a.mul(&b.add(&c)).le(&a.mul(&b).add(&a.mul(&c))), || "subdistributivity".into())?;
        check(a.mul(&Interval::one()) == a, || "interval identity".into())?;
        Ok(())
    })?;
    let strat = (small_rat(), small_rat(), 0usize..=6);
    run(cases, strat, |(u, v, m)| {
        let lhs = MomentVector::of_scalar(&(u.clone() + v.clone()), m);
        let rhs = MomentVector::of_scalar(&u, m).compose(&MomentVector::of_scalar(&v, m)).unwrap();
        check(lhs == rhs, || format!("binomial identity fails for u={u}, v={v}, m={m}"))
    })
}

fn vector_le(a: &MomentVector<Interval>, b: &MomentVector<Interval>) -> bool {
    a.le(b)
}

/// `a ⊑ a′` implies `a ⊗ b ⊑ a′ ⊗ b` and `a ⊕ b ⊑ a′ ⊕ b` for interval
/// moment vectors, and interval multiplication is monotone under containment.
pub fn interval_monotonicity(cases: u32) -> Result<(), String> {
    let strat = (1usize..=5).prop_flat_map(|len| {
        (prop::collection::vec(nested_interval(), len), interval_vector(len), any::<bool>())
    });
    run(cases, strat, |(pairs, b, left)| {
        let a = MomentVector::new(pairs.iter().map(|p| p.0.clone()).collect());
        let a2 = MomentVector::new(pairs.iter().map(|p| p.1.clone()).collect());
        check(vector_le(&a, &a2), || "generator broke containment".into())?;
        let (x, y) = if left {
            (a.compose(&b).unwrap(), a2.compose(&b).unwrap())
        } else {
            (b.compose(&a).unwrap(), b.compose(&a2).unwrap())
        };
        check(vector_le(&x, &y), || format!("⊗ not monotone: {x} vs {y}"))?;
        check(vector_le(&a.combine(&b).unwrap(), &a2.combine(&b).unwrap()), || "⊕ not monotone".into())
    })?;
    run(cases, (nested_interval(), nested_interval()), |((a, a2), (b, b2))| {
        check(a.mul(&b).le(&a2.mul(&b2)), || format!("{a}·{b} not inside {a2}·{b2}"))?;
        check(a.add(&b).le(&a2.add(&b2)), || "interval + not monotone".into())
    })?;
    // Every choice of points inside the intervals composes to a point inside
    // the interval composition.
    let strat = (1usize..=4).prop_flat_map(|len| {
        (interval_vector(len), interval_vector(len), prop::collection::vec((0i64..=4, 0i64..=4), len))
    });
    run(cases, strat, |(a, b, picks)| {
        let pick = |v: &MomentVector<Interval>, which: bool| -> MomentVector<Rat> {
            MomentVector::new(
                v.comps
                    .iter()
                    .zip(&picks)
                    .map(|(iv, (p, q))| {
                        let lo = iv.lo.finite().unwrap().clone();
                        let hi = iv.hi.finite().unwrap().clone();
                        let t = ratio(if which { *p } else { *q }, 4);
                        lo.clone() + (hi - lo) * t
                    })
                    .collect(),
            )
        };
        let exact = pick(&a, true).compose(&pick(&b, false)).unwrap();
        let enclosure = a.compose(&b).unwrap();
        for (x, iv) in exact.comps.iter().zip(&enclosure.comps) {
            check(iv.contains(x), || format!("{x} escapes {iv}"))?;
        }
        Ok(())
    })
}

fn random_poly() -> impl Strategy<Value = RatPoly> {
    prop::collection::vec(((0u32..=4), (0u32..=2), small_rat()), 1..6).prop_map(|terms| {
        let mut p = RatPoly::zero();
        for (ex, ey, c) in terms {
            p.add_term(Monomial::from_exponents(&[(0, ex), (1, ey)]), &c);
        }
        p
    })
}

/// Composite Simpson rule for `∫_a^b f`.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// The expectation of a polynomial over a sampled variable against numeric
/// quadrature (uniform) and a direct weighted sum (discrete).
pub fn expectation_vs_quadrature(cases: u32, rel_tol: f64) -> Result<(), String> {
    let dist = prop_oneof![
        (small_rat(), 1i64..=6).prop_map(|(a, w)| Dist::Uniform(a.clone(), a + rat(w))),
        prop::collection::vec((small_rat(), 1i64..=5), 1..4).prop_map(|pts| {
            let total: i64 = pts.iter().map(|p| p.1).sum();
            Dist::Discrete(pts.into_iter().map(|(v, w)| (v, ratio(w, total))).collect())
        }),
    ];
    run(cases, (random_poly(), dist, -3.0f64..3.0), |(p, d, y)| {
        let moments = dist_raw_moments(&d, 4);
        let e = p.expect(0, &moments).map_err(|e| TestCaseError::fail(e.to_string()))?;
        check(!e.vars().contains(&0), || "sampled variable survives".into())?;
        let got = e.eval_f64(&[0.0, y]);
        let want = match &d {
            Dist::Uniform(a, b) => {
                let (a, b) = (to_f64(a), to_f64(b));
                simpson(|x| p.eval_f64(&[x, y]), a, b, 2000) / (b - a)
            }
            Dist::Discrete(pts) => pts.iter().map(|(v, w)| to_f64(w) * p.eval_f64(&[to_f64(v), y])).sum(),
        };
        check((got - want).abs() <= rel_tol * want.abs().max(1.0), || format!("{got} vs {want}"))
    })
}

/// Solves the square system `rows · x = rhs` exactly; `None` when singular.
fn gauss(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let k = a[r][col].clone() / a[col][col].clone();
                for c in col..n {
                    let v = a[col][c].clone() * &k;
                    a[r][c] -= v;
                }
                let v = b[col].clone() * &k;
                b[r] -= v;
            }
        }
    }
    Some((0..n).map(|i| b[i].clone() / a[i][i].clone()).collect())
}

/// A small LP `min/max c·x` over `0 ≤ x ≤ 10` with extra random rows.
#[derive(Clone, Debug)]
pub struct SmallLp {
    pub n: usize,
    pub rows: Vec<(Vec<i64>, Relation, i64)>,
    pub cost: Vec<i64>,
    pub maximize: bool,
}

pub fn small_lp_strategy() -> impl Strategy<Value = SmallLp> {
    (2usize..=4).prop_flat_map(|n| {
        let row = (
            prop::collection::vec(-4i64..=4, n),
            prop_oneof![Just(Relation::Le), Just(Relation::Ge), Just(Relation::Eq)],
            -8i64..=12,
        );
        (prop::collection::vec(row, 1..=6), prop::collection::vec(-5i64..=5, n), any::<bool>())
            .prop_map(move |(rows, cost, maximize)| SmallLp { n, rows, cost, maximize })
    })
}

const BOX: i64 = 10;

/// Optimum by enumerating every basic solution of the box-bounded system;
/// `None` when infeasible.
pub fn vertex_optimum(lp: &SmallLp) -> Option<Rat> {
    let n = lp.n;
    // Every row as `a·x (rel) b`, including `x ≥ 0` and `x ≤ BOX`.
    let mut all: Vec<(Vec<Rat>, Relation, Rat)> =
        lp.rows.iter().map(|(a, r, b)| (a.iter().map(|v| rat(*v)).collect(), *r, rat(*b))).collect();
    for i in 0..n {
        let unit: Vec<Rat> = (0..n).map(|j| if i == j { rat(1) } else { rat(0) }).collect();
        all.push((unit.clone(), Relation::Ge, rat(0)));
        all.push((unit, Relation::Le, rat(BOX)));
    }
    let feasible = |x: &[Rat]| {
        all.iter().all(|(a, r, b)| {
            let v: Rat = a.iter().zip(x).map(|(c, x)| c * x).sum();
            match r {
                Relation::Le => v <= *b,
                Relation::Ge => v >= *b,
                Relation::Eq => v == *b,
            }
        })
    };
    let mut best: Option<Rat> = None;
    let m = all.len();
    let mut pick = vec![0usize; n];
    fn next(pick: &mut [usize], m: usize) -> bool {
        let n = pick.len();
        let mut i = n;
        while i > 0 {
            i -= 1;
            if pick[i] < m - (n - i) {
                pick[i] += 1;
                for j in i + 1..n {
                    pick[j] = pick[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
    for (i, p) in pick.iter_mut().enumerate() {
        *p = i;
    }
    loop {
        let a: Vec<Vec<Rat>> = pick.iter().map(|&i| all[i].0.clone()).collect();
        let b: Vec<Rat> = pick.iter().map(|&i| all[i].2.clone()).collect();
        if let Some(x) = gauss(a, b) {
            if feasible(&x) {
                let v: Rat = lp.cost.iter().zip(&x).map(|(c, x)| rat(*c) * x).sum();
                let better = match &best {
                    None => true,
                    Some(b) => (lp.maximize && v > *b) || (!lp.maximize && v < *b),
                };
                if better {
                    best = Some(v);
                }
            }
        }
        if !next(&mut pick, m) {
            break;
        }
    }
    best
}

pub fn to_problem(lp: &SmallLp) -> LpProblem {
    let mut pool = VarPool::new();
    let xs: Vec<_> = (0..lp.n).map(|i| pool.fresh(format!("x{i}"), VarKind::Nonneg)).collect();
    let mut p = LpProblem::new(pool);
    let form = |coef: &[i64], c: i64| {
        let mut e = AffineForm::constant(rat(-c));
        for (x, a) in xs.iter().zip(coef) {
            e.add_term(*x, &rat(*a));
        }
        e
    };
    for (a, r, b) in &lp.rows {
        p.add(form(a, *b), *r, "row");
    }
    for x in &xs {
        p.add(AffineForm::var(*x).sub(&AffineForm::constant(rat(BOX))), Relation::Le, "box");
    }
    let obj = form(&lp.cost, 0);
    p.with_objective(obj, if lp.maximize { Sense::Maximize } else { Sense::Minimize })
}

/// The built-in simplex, in floating point and in exact arithmetic, against
/// vertex enumeration.
pub fn simplex_vs_vertices(cases: u32, tol: f64) -> Result<(), String> {
    run(cases, small_lp_strategy(), |lp| {
        let want = vertex_optimum(&lp);
        let problem = to_problem(&lp);
        for (name, sol) in [("float", solve(&problem)), ("exact", solve_exact(&problem))] {
            match &want {
                None => check(sol.status == LpStatus::Infeasible, || format!("{name}: expected infeasible, got {}", sol.status))?,
                Some(v) => {
                    check(sol.is_optimal(), || format!("{name}: expected optimum {v}, got {}", sol.status))?;
                    let got = sol.objective.clone().unwrap();
                    let err = to_f64(&(got.clone() - v).abs());
                    check(err <= tol * to_f64(v).abs().max(1.0), || format!("{name}: {got} vs {v}"))?;
                }
            }
        }
        Ok(())
    })
}

const BRANCH: &str = "func main() begin\n  if prob(P) then\n    tick(1)\n  fi\nend\n";
const WALK: &str = "@pre(d > 0)\nfunc main() begin\n  x := 0;\n  while x < d do\n    t ~ uniform(-1, 2);\n    x := x + t;\n    tick(1)\n  od\nend\n";

/// Equal seeds give equal traces; the frequency of a `prob(p)` branch lies
/// within 4.5 standard errors of `p`.
pub fn interpreter_checks(cases: u32) -> Result<(), String> {
    let walk = load_program(WALK).map_err(|e| e.to_string())?;
    run(cases, (any::<u64>(), 1u64..=200), |(seed, trials)| {
        let init = valuation(&walk, &[("d".to_string(), rat(4))]);
        let cfg = SimulationConfig { trials, seed, step_limit: DEFAULT_STEP_LIMIT, m: 2 };
        let a = estimate_moments(&walk, &init, &cfg);
        let b = estimate_moments(&walk, &init, &cfg);
        check(a.costs == b.costs, || "same seed, different costs".into())?;
        let other = SimulationConfig { seed: seed.wrapping_add(1), ..cfg };
        let c = estimate_moments(&walk, &init, &other);
        check(trials < 20 || a.costs != c.costs, || "seed ignored".into())
    })?;
    run(cases.min(50), (1i64..=9, any::<u64>()), |(num, seed)| {
        let p = ratio(num, 10);
        let prog = load_program(&BRANCH.replace('P', &format!("{num}/10"))).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let trials = 20_000u64;
        let cfg = SimulationConfig { trials, seed, step_limit: DEFAULT_STEP_LIMIT, m: 1 };
        let est = estimate_moments(&prog, &[], &cfg);
        let pf = to_f64(&p);
        let se = (pf * (1.0 - pf) / trials as f64).sqrt();
        check((est.raw[0] - pf).abs() <= 4.5 * se, || format!("frequency {} for p = {pf}", est.raw[0]))
    })
}
