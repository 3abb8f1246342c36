//! Concrete syntax, AST and validation for the APPL language.
//!
//! ```text
//! S ::= skip | tick(c) | x := E | x ~ D | call f | while L do S od
//!     | if prob(p) then S else S fi | if L then S else S fi | S; S
//! L ::= true | not L | L and L | E <= E
//! E ::= x | c | E + E | E * E
//! D ::= uniform(a, b) | discrete(v1: p1, ..., vn: pn)
//! ```
//!
//! Files may start with `@pre(L)` (the precondition on initial states) and
//! `@int(x, ...)` (variables that only ever hold integers). `#` starts a
//! line comment.

mod ast;
mod parser;
mod pretty;
mod validate;

pub use ast::{Cond, Dist, Expr, Program, Stmt};
pub use parser::{parse_cond, parse_expr, parse_program, ParseError};
pub use pretty::{cond_to_string, expr_to_string, pretty_print, stmt_to_string};
pub use validate::{validate, Diagnostic};
