//! Pretty printer producing text that parses back to the same AST.

use super::ast::{Cond, Dist, Expr, Program, Stmt};
use crate::num::fmt_rat;
use std::fmt::Write;

pub fn expr_to_string(e: &Expr) -> String {
    match e {
        Expr::Var(x) => x.clone(),
        Expr::Const(c) => fmt_rat(c),
        Expr::Add(a, b) => {
            let rhs = match **b {
                Expr::Add(..) => format!("({})", expr_to_string(b)),
                _ => expr_to_string(b),
            };
            format!("{} + {}", expr_to_string(a), rhs)
        }
        Expr::Mul(a, b) => {
            let lhs = match **a {
                Expr::Add(..) => format!("({})", expr_to_string(a)),
                _ => expr_to_string(a),
            };
            let rhs = match **b {
                Expr::Add(..) | Expr::Mul(..) => format!("({})", expr_to_string(b)),
                _ => expr_to_string(b),
            };
            format!("{lhs} * {rhs}")
        }
    }
}

pub fn cond_to_string(c: &Cond) -> String {
    match c {
        Cond::True => "true".into(),
        Cond::Not(inner) => format!("not {}", cond_atom(inner)),
        Cond::And(a, b) => {
            let rhs = match **b {
                Cond::And(..) => format!("({})", cond_to_string(b)),
                _ => cond_atom(b),
            };
            format!("{} and {}", cond_to_string(a), rhs)
        }
        Cond::Le(a, b) => format!("{} <= {}", expr_to_string(a), expr_to_string(b)),
    }
}

fn cond_atom(c: &Cond) -> String {
    match c {
        Cond::True | Cond::Not(_) => cond_to_string(c),
        _ => format!("({})", cond_to_string(c)),
    }
}

fn dist_to_string(d: &Dist) -> String {
    match d {
        Dist::Uniform(a, b) => format!("uniform({}, {})", fmt_rat(a), fmt_rat(b)),
        Dist::Discrete(pts) => {
            let items: Vec<String> = pts.iter().map(|(v, p)| format!("{}: {}", fmt_rat(v), fmt_rat(p))).collect();
            format!("discrete({})", items.join(", "))
        }
    }
}

fn write_stmt(out: &mut String, s: &Stmt, indent: usize) {
    let pad = "  ".repeat(indent);
    match s {
        Stmt::Seq(a, b) => {
            if let Stmt::Seq(..) = **a {
                let _ = writeln!(out, "{pad}begin");
                write_stmt(out, a, indent + 1);
                let _ = write!(out, "\n{pad}end");
            } else {
                write_stmt(out, a, indent);
            }
            out.push_str(";\n");
            write_stmt(out, b, indent);
        }
        Stmt::Skip => {
            let _ = write!(out, "{pad}skip");
        }
        Stmt::Tick(c) => {
            let _ = write!(out, "{pad}tick({})", fmt_rat(c));
        }
        Stmt::Assign(x, e) => {
            let _ = write!(out, "{pad}{x} := {}", expr_to_string(e));
        }
        Stmt::Sample(x, d) => {
            let _ = write!(out, "{pad}{x} ~ {}", dist_to_string(d));
        }
        Stmt::Call(f) => {
            let _ = write!(out, "{pad}call {f}");
        }
        Stmt::While(c, body) => {
            let _ = writeln!(out, "{pad}while {} do", cond_to_string(c));
            write_stmt(out, body, indent + 1);
            let _ = write!(out, "\n{pad}od");
        }
        Stmt::Prob(p, a, b) => {
            let _ = writeln!(out, "{pad}if prob({}) then", fmt_rat(p));
            write_stmt(out, a, indent + 1);
            let _ = writeln!(out, "\n{pad}else");
            write_stmt(out, b, indent + 1);
            let _ = write!(out, "\n{pad}fi");
        }
        Stmt::If(c, a, b) => {
            let _ = writeln!(out, "{pad}if {} then", cond_to_string(c));
            write_stmt(out, a, indent + 1);
            let _ = writeln!(out, "\n{pad}else");
            write_stmt(out, b, indent + 1);
            let _ = write!(out, "\n{pad}fi");
        }
    }
}

pub fn stmt_to_string(s: &Stmt) -> String {
    let mut out = String::new();
    write_stmt(&mut out, s, 0);
    out
}

pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    if !p.ints.is_empty() {
        let names: Vec<&str> = p.ints.iter().map(|s| s.as_str()).collect();
        let _ = writeln!(out, "@int({})", names.join(", "));
    }
    if p.pre != Cond::True {
        let _ = writeln!(out, "@pre({})", cond_to_string(&p.pre));
    }
    for (name, body) in &p.decls {
        let _ = writeln!(out, "func {name}() begin");
        write_stmt(&mut out, body, 1);
        out.push_str("\nend\n\n");
    }
    out.push_str("func main() begin\n");
    write_stmt(&mut out, &p.main, 1);
    out.push_str("\nend\n");
    out
}
