mod props;

use appl_moments::analysis::{analyze_program, AnalysisConfig};
use appl_moments::interp::{step, trial_rng, Config};
use appl_moments::lang::{parse_program, pretty_print, Cond, Dist, Expr, Program, Stmt};
use appl_moments::lp::{solve, LpStatus, Relation};
use appl_moments::num::{rat, ratio, to_f64, Rat};
use appl_moments::pipeline::{analyze_source, find_gamma0, load_program, AnalyzeOptions};
use appl_moments::poly::{dist_raw_moments, AffineForm, Monomial, RatPoly};
use appl_moments::postproc::{central_upper, MomentBounds, TailInputs};
use appl_moments::soundness::check_termination_moment;
use indexmap::IndexMap;
use num_traits::Zero;
use proptest::prelude::*;
use props::{check_all, small_rat};
use std::collections::BTreeSet;

const VARS: [&str; 3] = ["x", "y", "n"];

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        prop::sample::select(&VARS[..]).prop_map(Expr::var),
        small_rat().prop_map(Expr::Const),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::mul(a, b)),
        ]
    })
}

fn cond() -> impl Strategy<Value = Cond> {
    let leaf = prop_oneof![Just(Cond::True), (expr(), expr()).prop_map(|(a, b)| Cond::Le(a, b))];
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|c| Cond::Not(Box::new(c))),
            (inner.clone(), inner).prop_map(|(a, b)| Cond::And(Box::new(a), Box::new(b))),
        ]
    })
}

fn dist() -> impl Strategy<Value = Dist> {
    prop_oneof![
        (small_rat(), 1i64..=5).prop_map(|(a, w)| Dist::Uniform(a.clone(), a + rat(w))),
        (small_rat(), small_rat(), 1i64..=3).prop_map(|(a, b, w)| Dist::Discrete(vec![(a, ratio(w, 4)), (b, ratio(4 - w, 4))])),
    ]
}

fn stmt() -> impl Strategy<Value = Stmt> {
    let var = prop::sample::select(&VARS[..]).prop_map(str::to_string);
    let leaf = prop_oneof![
        Just(Stmt::Skip),
        small_rat().prop_map(Stmt::Tick),
        (var.clone(), expr()).prop_map(|(x, e)| Stmt::Assign(x, e)),
        (var, dist()).prop_map(|(x, d)| Stmt::Sample(x, d)),
        Just(Stmt::Call("f".into())),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            (cond(), inner.clone()).prop_map(|(c, b)| Stmt::while_(c, b)),
            (1i64..=9, inner.clone(), inner.clone()).prop_map(|(p, a, b)| Stmt::prob(ratio(p, 10), a, b)),
            (cond(), inner.clone(), inner.clone()).prop_map(|(c, a, b)| Stmt::if_(c, a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Stmt::seq(a, b)),
        ]
    })
}

fn program() -> impl Strategy<Value = Program> {
    (stmt(), stmt(), cond(), any::<bool>()).prop_map(|(f, main, pre, int_x)| {
        let mut decls = IndexMap::new();
        decls.insert("f".to_string(), f);
        let ints: BTreeSet<String> = if int_x { ["x".to_string()].into() } else { BTreeSet::new() };
        Program::new(decls, main, pre, ints)
    })
}

#[test]
fn pretty_print_round_trips() {
    check_all(500, program(), |p| {
        let text = pretty_print(&p);
        let back = parse_program(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, p, "text:\n{}", text);
        Ok(())
    });
}

#[test]
fn subtraction_evaluates_as_difference() {
    check_all(500, (expr(), expr(), small_rat(), small_rat(), small_rat()), |(a, b, x, y, n)| {
        let look = |v: &str| match v {
            "x" => x.clone(),
            "y" => y.clone(),
            _ => n.clone(),
        };
        prop_assert_eq!(Expr::sub(a.clone(), b.clone()).eval(&look), a.eval(&look) - b.eval(&look));
        Ok(())
    });
}

fn poly() -> impl Strategy<Value = RatPoly> {
    prop::collection::vec((0u32..=3, 0u32..=2, small_rat()), 0..6).prop_map(|terms| {
        let mut p = RatPoly::zero();
        for (ex, ey, c) in terms {
            p.add_term(Monomial::from_exponents(&[(0, ex), (1, ey)]), &c);
        }
        p
    })
}

#[test]
fn expectation_is_linear() {
    check_all(500, (poly(), poly(), small_rat(), 1i64..=4), |(p, q, a, w)| {
        let m = dist_raw_moments(&Dist::Uniform(a.clone(), a + rat(w)), 3);
        let lhs = p.add(&q).expect(0, &m).unwrap();
        let rhs = p.expect(0, &m).unwrap().add(&q.expect(0, &m).unwrap());
        prop_assert_eq!(lhs, rhs);
        Ok(())
    });
}

#[test]
fn substitution_commutes_with_evaluation() {
    check_all(500, (poly(), poly(), small_rat(), small_rat()), |(p, e, x, y)| {
        let g = vec![x, y];
        let ev = e.eval(&g).unwrap();
        let lhs = p.subst(0, &e).eval(&g).unwrap();
        let rhs = p.eval(&[ev, g[1].clone()]).unwrap();
        prop_assert_eq!(lhs, rhs);
        Ok(())
    });
}

#[test]
fn uniform_draws_stay_in_support_with_the_right_moments() {
    let p = load_program("func main() begin\n  t ~ uniform(-1, 2)\nend\n").unwrap();
    let n = 100_000u64;
    let (mut s1, mut s2, mut q1, mut q2) = (0.0, 0.0, 0.0, 0.0);
    for trial in 0..n {
        let mut rng = trial_rng(5, trial);
        let mut c = Config::initial(&p, &[Rat::zero()]);
        step(&p, &mut c, &mut rng);
        let t = c.vals[0].to_f64();
        assert!((-1.0..=2.0).contains(&t), "{t}");
        s1 += t;
        s2 += t * t;
        q1 += t * t;
        q2 += t.powi(4);
    }
    let nf = n as f64;
    let (m1, m2) = (s1 / nf, s2 / nf);
    let se1 = ((q1 / nf - m1 * m1) / nf).sqrt();
    let se2 = ((q2 / nf - m2 * m2) / nf).sqrt();
    assert!((m1 - 0.5).abs() <= 4.0 * se1, "{m1}");
    assert!((m2 - 1.0).abs() <= 4.0 * se2, "{m2}");
}

#[test]
fn cost_changes_only_at_ticks() {
    let p = load_program(include_str!("../../../corpus/rdwalk.appl")).unwrap();
    let init = appl_moments::interp::valuation(&p, &[("d".into(), rat(6))]);
    for trial in 0..50 {
        let mut rng = trial_rng(1, trial);
        let mut c = Config::initial(&p, &init);
        while !c.is_terminal() {
            let before = c.cost.clone();
            let tick = match c.stmt {
                Stmt::Tick(v) => Some(v.clone()),
                Stmt::Seq(a, _) => match &**a {
                    Stmt::Tick(v) => Some(v.clone()),
                    _ => None,
                },
                _ => None,
            };
            step(&p, &mut c, &mut rng);
            if c.cost != before {
                assert_eq!(Some(c.cost.clone() - before), tick);
            }
        }
    }
}

#[test]
fn straight_line_rules_add_no_unknowns() {
    let text = "func main() begin\n  tick(2);\n  x := x + 1;\n  t ~ uniform(0, 4);\n  if prob(1/3) then tick(5) else skip fi\nend\n";
    let p = load_program(text).unwrap();
    let der = analyze_program(&p, AnalysisConfig::moments(3, 1)).unwrap();
    assert!(der.problem.vars.is_empty());
    assert!(der.problem.constraints.is_empty());
}

#[test]
fn frame_specs_are_restricted_to_their_level() {
    for name in ["rdwalk", "coupon11", "geo"] {
        let text = std::fs::read_to_string(format!("{}/../../corpus/{name}.appl", env!("CARGO_MANIFEST_DIR"))).unwrap();
        let p = load_program(&text).unwrap();
        let der = analyze_program(&p, AnalysisConfig::moments(3, 1)).unwrap();
        for s in &der.instances {
            assert!(s.pre.is_restricted(s.h) && s.post.is_restricted(s.h), "{name}: {} at level {}", s.func, s.h);
        }
    }
}

#[test]
fn lp_solutions_satisfy_their_constraints() {
    check_all(200, props::small_lp_strategy(), |lp| {
        let problem = props::to_problem(&lp);
        let sol = solve(&problem);
        if sol.is_optimal() {
            let vals = sol.values.clone();
            let v = problem.max_violation(&|x| vals[x.0 as usize].clone());
            prop_assert!(to_f64(&v) <= 1e-7, "violation {}", v);
        }
        Ok(())
    });
}

#[test]
fn extra_constraints_never_improve_the_optimum() {
    let extra = (prop::collection::vec(-4i64..=4, 4), -6i64..=10);
    check_all(200, (props::small_lp_strategy(), extra), |(lp, (coef, b))| {
        let base = props::to_problem(&lp);
        let mut tighter = base.clone();
        let mut e = AffineForm::constant(rat(-b));
        for (i, (v, _, _)) in base.vars.iter().enumerate() {
            e.add_term(v, &rat(coef[i]));
        }
        tighter.add(e, Relation::Le, "extra");
        let (a, t) = (solve(&base), solve(&tighter));
        match (a.objective, t.objective) {
            (Some(a), Some(t)) => {
                let worse_or_equal = if lp.maximize { t <= a } else { t >= a };
                prop_assert!(worse_or_equal, "{} then {}", a, t);
            }
            (None, Some(_)) => prop_assert!(false, "tightening made an infeasible LP feasible"),
            _ => prop_assert!(t.status == LpStatus::Infeasible || a.status != LpStatus::Optimal),
        }
        Ok(())
    });
}

#[test]
fn termination_check_is_monotone_in_order() {
    for (name, top) in [("walk21", 4), ("coupon11", 4), ("rdwalk", 3), ("geo", 4)] {
        let text = std::fs::read_to_string(format!("{}/../../corpus/{name}.appl", env!("CARGO_MANIFEST_DIR"))).unwrap();
        let p = load_program(&text).unwrap();
        let g = find_gamma0(&p);
        let verdicts: Vec<bool> = (1..=top).map(|k| check_termination_moment(&p, k, &g).unwrap().passed()).collect();
        for k in 1..verdicts.len() {
            assert!(!verdicts[k] || verdicts[k - 1], "{name}: pass at {} but not at {}", k + 1, k);
        }
        assert!(verdicts[0], "{name}: no expected step bound");
    }
}

fn bounds() -> impl Strategy<Value = MomentBounds> {
    (0i64..=20, 0i64..=10, 0i64..=50, 0i64..=500, 0i64..=5000).prop_map(|(l1, w1, w2, w3, w4)| {
        let (l1, u1) = (rat(l1), rat(l1 + w1));
        let u2 = u1.clone() * &u1 + rat(w2);
        let u3 = u2.clone() * &u1 + rat(w3);
        let u4 = u2.clone() * &u2 + rat(w4);
        let l2 = l1.clone() * &l1;
        let l3 = l2.clone() * &l1;
        let l4 = l2.clone() * &l2;
        MomentBounds::numeric(vec![rat(1), l1, l2, l3, l4], vec![rat(1), u1, u2, u3, u4])
    })
}

#[test]
fn tail_bounds_are_probabilities_and_non_increasing() {
    check_all(300, (bounds(), any::<bool>()), |(b, nonneg)| {
        let inputs = TailInputs::from_bounds(&b, nonneg);
        let rows: Vec<_> = (1..=40).map(|i| inputs.row(i as f64 * 2.5)).collect();
        let columns = |r: &appl_moments::postproc::TailRow| {
            let mut v: Vec<Option<f64>> = r.markov.clone();
            v.extend([r.cantelli, r.chebyshev4, r.min]);
            v
        };
        for w in rows.windows(2) {
            for (x, y) in columns(&w[0]).into_iter().zip(columns(&w[1])) {
                for v in [x, y].into_iter().flatten() {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                if let (Some(x), Some(y)) = (x, y) {
                    prop_assert!(y <= x + 1e-12, "{} then {}", x, y);
                }
            }
        }
        Ok(())
    });
}

#[test]
fn variance_bound_is_upper_second_minus_lower_mean_squared() {
    check_all(300, bounds(), |b| {
        let c = central_upper(&b, 2).unwrap();
        let want = b.hi_val[2].clone() - b.lo_val[1].clone() * &b.lo_val[1];
        prop_assert_eq!(c.exact, Some(want));
        Ok(())
    });
}

#[test]
fn reports_are_reproducible() {
    let text = include_str!("../../../corpus/walk21.appl");
    let opts = AnalyzeOptions::new(3, 1).eval(&[("x", 2)]);
    let strip = |mut v: serde_json::Value| {
        v["lp"]["timing"] = serde_json::Value::Null;
        serde_json::to_string(&v).unwrap()
    };
    let a = strip(analyze_source(text, "walk21", &opts).unwrap().to_json());
    let b = strip(analyze_source(text, "walk21", &opts).unwrap().to_json());
    assert_eq!(a, b);
}
