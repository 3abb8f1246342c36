//! Analysis reports: JSON and plain-text rendering.

use crate::interp::EmpiricalMoments;
use crate::num::{fmt_rat, to_f64, Rat};
use crate::poly::{rat_to_json, RatPoly};
use crate::postproc::CentralBound;
use crate::soundness::SoundnessVerdict;
use serde_json::{json, Value};
use std::fmt::Write;

/// Bounds on one raw moment `E[X^k]`.
#[derive(Clone, Debug)]
pub struct MomentRow {
    pub k: usize,
    pub lo: Option<RatPoly>,
    pub hi: Option<RatPoly>,
    pub lo_val: Option<Rat>,
    pub hi_val: Option<Rat>,
    /// The solver's assignment satisfied every constraint exactly.
    pub lo_exact: bool,
    pub hi_exact: bool,
    pub lo_note: Option<String>,
    pub hi_note: Option<String>,
}

impl MomentRow {
    pub fn empty(k: usize) -> Self {
        MomentRow {
            k,
            lo: None,
            hi: None,
            lo_val: None,
            hi_val: None,
            lo_exact: false,
            hi_exact: false,
            lo_note: None,
            hi_note: None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LpStats {
    pub vars: usize,
    pub constraints: usize,
    /// Unknowns and rows left after presolve.
    pub reduced: (usize, usize),
    pub gen_seconds: f64,
    pub solve_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub program: String,
    pub m: usize,
    pub d: u32,
    pub var_names: Vec<String>,
    pub gamma0: Vec<Rat>,
    pub rows: Vec<MomentRow>,
    pub central: Vec<CentralBound>,
    pub soundness: Option<SoundnessVerdict>,
    pub lp: LpStats,
    pub nonneg_cost: bool,
    pub simulation: Option<EmpiricalMoments>,
}

fn opt_poly(p: &Option<RatPoly>, names: &[String]) -> Value {
    p.as_ref().map(|p| p.to_json(names)).unwrap_or(Value::Null)
}

fn opt_rat(r: &Option<Rat>) -> Value {
    r.as_ref().map(rat_to_json).unwrap_or(Value::Null)
}

impl AnalysisReport {
    pub fn row(&self, k: usize) -> &MomentRow {
        &self.rows[k - 1]
    }

    pub fn hi(&self, k: usize) -> Option<f64> {
        self.row(k).hi_val.as_ref().map(to_f64)
    }

    pub fn lo(&self, k: usize) -> Option<f64> {
        self.row(k).lo_val.as_ref().map(to_f64)
    }

    pub fn central_upper(&self, k: usize) -> Option<f64> {
        self.central.iter().find(|c| c.k == k).map(|c| c.value)
    }

    pub fn sound(&self) -> bool {
        self.soundness.as_ref().map(|s| s.passed()).unwrap_or(false)
    }

    /// Does each simulated raw moment lie within `[L − z·SE, U + z·SE]`?
    pub fn simulation_agrees(&self, z: f64) -> Option<Vec<bool>> {
        let sim = self.simulation.as_ref()?;
        Some(
            self.rows
                .iter()
                .map(|r| {
                    let i = r.k - 1;
                    let (x, se) = (sim.raw[i], sim.stderr[i]);
                    let lo_ok = r.lo_val.as_ref().map_or(true, |l| x >= to_f64(l) - z * se);
                    let hi_ok = r.hi_val.as_ref().map_or(true, |u| x <= to_f64(u) + z * se);
                    lo_ok && hi_ok
                })
                .collect(),
        )
    }

    pub fn to_json(&self) -> Value {
        let names = &self.var_names;
        let gamma0: serde_json::Map<String, Value> =
            names.iter().zip(&self.gamma0).map(|(n, v)| (n.clone(), rat_to_json(v))).collect();
        let moments: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "k": r.k,
                    "lower": opt_poly(&r.lo, names),
                    "upper": opt_poly(&r.hi, names),
                    "lower_text": r.lo.as_ref().map(|p| p.render(names)),
                    "upper_text": r.hi.as_ref().map(|p| p.render(names)),
                    "lower_at_gamma0": opt_rat(&r.lo_val),
                    "upper_at_gamma0": opt_rat(&r.hi_val),
                    "lower_note": r.lo_note,
                    "upper_note": r.hi_note,
                })
            })
            .collect();
        let central: Vec<Value> = self
            .central
            .iter()
            .map(|c| {
                json!({
                    "k": c.k,
                    "upper": c.value,
                    "exact": c.exact.as_ref().map(rat_to_json),
                    "symbolic": c.symbolic.as_ref().map(|p| p.to_json(names)),
                })
            })
            .collect();
        let mut out = json!({
            "program": self.program,
            "m": self.m,
            "d": self.d,
            "gamma0": gamma0,
            "moments": moments,
            "central": central,
            "soundness": self.soundness.as_ref().map(|s| s.to_json(names)).unwrap_or(json!({"sound": false, "checked": false})),
            "lp": {
                "vars": self.lp.vars,
                "constraints": self.lp.constraints,
                "reduced_vars": self.lp.reduced.0,
                "reduced_constraints": self.lp.reduced.1,
                "timing": {"generate_s": self.lp.gen_seconds, "solve_s": self.lp.solve_seconds},
            },
        });
        if let Some(sim) = &self.simulation {
            let mut s = sim.to_json();
            s["within_4se"] = json!(self.simulation_agrees(4.0));
            out["simulation"] = s;
        }
        out
    }

    pub fn to_text(&self) -> String {
        let names = &self.var_names;
        let mut s = String::new();
        let g: Vec<String> = names.iter().zip(&self.gamma0).map(|(n, v)| format!("{n}={}", fmt_rat(v))).collect();
        let _ = writeln!(s, "program {} (moments up to {}, template degree {}) at {}", self.program, self.m, self.d, g.join(", "));
        for r in &self.rows {
            let side = |p: &Option<RatPoly>, v: &Option<Rat>, note: &Option<String>| match (p, v) {
                (Some(p), Some(v)) => format!("{}  [= {}]", p.render(names), fmt_rat(v)),
                _ => note.clone().unwrap_or_else(|| "-".into()),
            };
            let _ = writeln!(s, "E[X^{}] >= {}", r.k, side(&r.lo, &r.lo_val, &r.lo_note));
            let _ = writeln!(s, "E[X^{}] <= {}", r.k, side(&r.hi, &r.hi_val, &r.hi_note));
        }
        for c in &self.central {
            let v = c.exact.as_ref().map(fmt_rat).unwrap_or_else(|| format!("{}", c.value));
            match &c.symbolic {
                Some(p) => {
                    let _ = writeln!(s, "central {} <= {}  [= {v}]", c.k, p.render(names));
                }
                None => {
                    let _ = writeln!(s, "central {} <= {v}", c.k);
                }
            }
        }
        match &self.soundness {
            Some(v) => {
                let _ = writeln!(s, "soundness: {}", if v.passed() { "pass" } else { "FAIL" });
            }
            None => {
                let _ = writeln!(s, "soundness: not checked");
            }
        }
        let _ = writeln!(
            s,
            "lp: {} vars, {} constraints ({} x {} after presolve), {:.3}s",
            self.lp.vars,
            self.lp.constraints,
            self.lp.reduced.0,
            self.lp.reduced.1,
            self.lp.gen_seconds + self.lp.solve_seconds
        );
        s
    }
}
