//! The two side conditions that make the inferred bounds trustworthy:
//! a bounded termination moment and bounded variable updates.

use appl_moments::pipeline::{find_gamma0, load_program};
use appl_moments::soundness::check_soundness;

const PROGRAMS: &[(&str, &str)] = &[
    ("geo", include_str!("../../../corpus/geo.appl")),
    ("walk21", include_str!("../../../corpus/walk21.appl")),
    ("diverge", include_str!("../../../corpus/diverge.appl")),
    (
        "doubling",
        "@pre(n >= 0)\nfunc main() begin\n  x := 1;\n  while 0 < n do\n    x := 2 * x;\n    n := n - 1;\n    tick(1)\n  od\nend\n",
    ),
];

fn main() -> anyhow::Result<()> {
    for (name, text) in PROGRAMS {
        let p = load_program(text)?;
        let v = check_soundness(&p, 2, 1, &find_gamma0(&p))?;
        println!("{name:<10} {}", serde_json::to_string(&v.to_json(&p.vars))?);
    }
    Ok(())
}
