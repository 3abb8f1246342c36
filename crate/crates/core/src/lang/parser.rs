//! Lexer and recursive-descent parser for `.appl` files.

use super::ast::{Cond, Dist, Expr, Program, Stmt};
use crate::num::{parse_rat, Rat};
use indexmap::IndexMap;
use num_traits::{One, Zero};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Sym(&'static str),
    Directive(String),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 17] = [":=", "<=", ">=", "==", "~", ";", "(", ")", ",", ":", "+", "-", "*", "/", "<", ">", "="];

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' || c == '@' {
            let start = i;
            i += 1;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = match word.strip_prefix('@') {
                Some(d) => Tok::Directive(d.to_string()),
                None => Tok::Ident(word),
            };
            out.push(Token { tok, line: start_line, col: start_col });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && i + 1 < chars.len() && chars[i + 1].is_ascii_digit()) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Num(word), line: start_line, col: start_col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let sym = SYMBOLS.iter().find(|s| rest.starts_with(**s));
        match sym {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token { tok: Tok::Sym(s), line: start_line, col: start_col });
            }
            None => {
                return Err(ParseError { line, col, message: format!("unexpected character '{c}'") });
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

const KEYWORDS: [&str; 20] = [
    "func", "begin", "end", "while", "do", "od", "if", "prob", "then", "else", "fi", "tick", "call", "skip", "uniform",
    "discrete", "and", "or", "not", "true",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }
    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }
    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError { line: t.line, col: t.col, message: msg.into() })
    }
    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }
    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == kw)
    }
    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }
    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected '{kw}', found {}", describe(self.peek())))
        }
    }
    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected '{s}', found {}", describe(self.peek())))
        }
    }
    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(w) if !KEYWORDS.contains(&w.as_str()) && w != "false" => {
                self.bump();
                Ok(w)
            }
            other => self.err(format!("expected identifier, found {}", describe(&other))),
        }
    }

    /// Signed literal: `3`, `-0.5`, `1/3`, `-2/7`.
    fn number(&mut self) -> PResult<Rat> {
        let neg = if self.is_sym("-") {
            self.bump();
            true
        } else {
            false
        };
        let n = match self.peek().clone() {
            Tok::Num(s) => {
                self.bump();
                match parse_rat(&s) {
                    Some(r) => r,
                    None => return self.err(format!("malformed number '{s}'")),
                }
            }
            other => return self.err(format!("expected number, found {}", describe(&other))),
        };
        let n = if self.is_sym("/") && matches!(self.peek_at(1), Tok::Num(_)) {
            self.bump();
            let d = match self.bump() {
                Tok::Num(s) => parse_rat(&s).unwrap_or_else(Rat::zero),
                _ => unreachable!(),
            };
            if d.is_zero() {
                return self.err("division by zero in literal");
            }
            n / d
        } else {
            n
        };
        Ok(if neg { -n } else { n })
    }

    fn program(&mut self) -> PResult<Program> {
        let mut pre = Cond::True;
        let mut ints = BTreeSet::new();
        let mut decls: IndexMap<String, Stmt> = IndexMap::new();
        let mut main: Option<Stmt> = None;
        let mut calls: Vec<(String, usize, usize)> = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Directive(d) if d == "pre" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let c = self.cond()?;
                    self.expect_sym(")")?;
                    pre = if pre == Cond::True { c } else { Cond::and(pre, c) };
                }
                Tok::Directive(d) if d == "int" => {
                    self.bump();
                    self.expect_sym("(")?;
                    loop {
                        ints.insert(self.ident()?);
                        if self.is_sym(",") {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.expect_sym(")")?;
                }
                Tok::Directive(d) => return self.err(format!("unknown directive '@{d}'")),
                Tok::Ident(w) if w == "func" => {
                    self.bump();
                    let t = &self.toks[self.pos];
                    let (line, col) = (t.line, t.col);
                    let name = self.ident()?;
                    self.expect_sym("(")?;
                    self.expect_sym(")")?;
                    self.expect_kw("begin")?;
                    let body = self.stmts(&mut calls)?;
                    self.expect_kw("end")?;
                    if name == "main" {
                        if main.is_some() {
                            return Err(ParseError { line, col, message: "duplicate function 'main'".into() });
                        }
                        main = Some(body);
                    } else {
                        if decls.contains_key(&name) {
                            return Err(ParseError { line, col, message: format!("duplicate function '{name}'") });
                        }
                        decls.insert(name, body);
                    }
                }
                Tok::Eof => break,
                other => return self.err(format!("expected 'func' or directive, found {}", describe(&other))),
            }
        }
        let main = match main {
            Some(m) => m,
            None => return self.err("missing function 'main'"),
        };
        for (f, line, col) in calls {
            if !decls.contains_key(&f) {
                return Err(ParseError { line, col, message: format!("unknown function '{f}' in call") });
            }
        }
        Ok(Program::new(decls, main, pre, ints))
    }

    fn stmts(&mut self, calls: &mut Vec<(String, usize, usize)>) -> PResult<Stmt> {
        let mut items = vec![self.stmt(calls)?];
        while self.is_sym(";") {
            self.bump();
            if self.is_kw("end") || self.is_kw("od") || self.is_kw("fi") || self.is_kw("else") {
                break;
            }
            items.push(self.stmt(calls)?);
        }
        Ok(Stmt::seq_all(items))
    }

    fn stmt(&mut self, calls: &mut Vec<(String, usize, usize)>) -> PResult<Stmt> {
        let t = self.toks[self.pos].clone();
        match t.tok {
            Tok::Ident(ref w) if w == "skip" => {
                self.bump();
                Ok(Stmt::Skip)
            }
            Tok::Ident(ref w) if w == "tick" => {
                self.bump();
                self.expect_sym("(")?;
                let c = self.number()?;
                self.expect_sym(")")?;
                Ok(Stmt::Tick(c))
            }
            Tok::Ident(ref w) if w == "call" => {
                self.bump();
                let f = self.ident()?;
                calls.push((f.clone(), t.line, t.col));
                Ok(Stmt::Call(f))
            }
            Tok::Ident(ref w) if w == "begin" => {
                self.bump();
                let s = self.stmts(calls)?;
                self.expect_kw("end")?;
                Ok(s)
            }
            Tok::Ident(ref w) if w == "while" => {
                self.bump();
                let c = self.cond()?;
                self.expect_kw("do")?;
                let body = self.stmts(calls)?;
                self.expect_kw("od")?;
                Ok(Stmt::while_(c, body))
            }
            Tok::Ident(ref w) if w == "if" => {
                self.bump();
                if self.is_kw("prob") {
                    self.bump();
                    self.expect_sym("(")?;
                    let p = self.number()?;
                    self.expect_sym(")")?;
                    if p < Rat::zero() || p > Rat::one() {
                        return Err(ParseError { line: t.line, col: t.col, message: "probability must lie in [0,1]".into() });
                    }
                    self.expect_kw("then")?;
                    let a = self.stmts(calls)?;
                    let b = self.else_part(calls)?;
                    Ok(Stmt::prob(p, a, b))
                } else {
                    let c = self.cond()?;
                    self.expect_kw("then")?;
                    let a = self.stmts(calls)?;
                    let b = self.else_part(calls)?;
                    Ok(Stmt::if_(c, a, b))
                }
            }
            Tok::Ident(_) => {
                let x = self.ident()?;
                if self.is_sym(":=") {
                    self.bump();
                    Ok(Stmt::Assign(x, self.expr()?))
                } else if self.is_sym("~") {
                    self.bump();
                    let d = self.dist(t.line, t.col)?;
                    Ok(Stmt::Sample(x, d))
                } else {
                    self.err(format!("expected ':=' or '~' after '{x}'"))
                }
            }
            other => self.err(format!("expected statement, found {}", describe(&other))),
        }
    }

    fn else_part(&mut self, calls: &mut Vec<(String, usize, usize)>) -> PResult<Stmt> {
        let b = if self.is_kw("else") {
            self.bump();
            self.stmts(calls)?
        } else {
            Stmt::Skip
        };
        self.expect_kw("fi")?;
        Ok(b)
    }

    fn dist(&mut self, line: usize, col: usize) -> PResult<Dist> {
        if self.is_kw("uniform") {
            self.bump();
            self.expect_sym("(")?;
            let a = self.number()?;
            self.expect_sym(",")?;
            let b = self.number()?;
            self.expect_sym(")")?;
            if a >= b {
                return Err(ParseError { line, col, message: "uniform requires a < b".into() });
            }
            Ok(Dist::Uniform(a, b))
        } else if self.is_kw("discrete") {
            self.bump();
            self.expect_sym("(")?;
            let mut pts = Vec::new();
            loop {
                let paren = self.is_sym("(");
                if paren {
                    self.bump();
                }
                let v = self.number()?;
                self.expect_sym(":")?;
                let p = self.number()?;
                if paren {
                    self.expect_sym(")")?;
                }
                pts.push((v, p));
                if self.is_sym(",") {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect_sym(")")?;
            if pts.iter().any(|(_, p)| *p < Rat::zero()) {
                return Err(ParseError { line, col, message: "discrete probabilities must be nonnegative".into() });
            }
            let total: Rat = pts.iter().map(|(_, p)| p.clone()).sum();
            if total != Rat::one() {
                return Err(ParseError { line, col, message: "discrete probabilities must sum to 1".into() });
            }
            Ok(Dist::Discrete(pts))
        } else {
            self.err(format!("expected distribution, found {}", describe(self.peek())))
        }
    }

    fn cond(&mut self) -> PResult<Cond> {
        let mut c = self.conj()?;
        while self.is_kw("or") {
            self.bump();
            let d = self.conj()?;
            c = Cond::or(c, d);
        }
        Ok(c)
    }

    fn conj(&mut self) -> PResult<Cond> {
        let mut c = self.catom()?;
        while self.is_kw("and") {
            self.bump();
            let d = self.catom()?;
            c = Cond::and(c, d);
        }
        Ok(c)
    }

    fn catom(&mut self) -> PResult<Cond> {
        if self.is_kw("not") {
            self.bump();
            return Ok(Cond::not(self.catom()?));
        }
        if self.is_kw("true") {
            self.bump();
            return Ok(Cond::True);
        }
        if self.is_kw("false") {
            self.bump();
            return Ok(Cond::not(Cond::True));
        }
        let save = self.pos;
        match self.comparison() {
            Ok(c) => Ok(c),
            Err(e) => {
                let after = self.pos;
                self.pos = save;
                if self.is_sym("(") {
                    self.bump();
                    if let Ok(c) = self.cond() {
                        if self.is_sym(")") {
                            self.bump();
                            return Ok(c);
                        }
                    }
                }
                self.pos = after;
                Err(e)
            }
        }
    }

    fn comparison(&mut self) -> PResult<Cond> {
        let a = self.expr()?;
        let op = match self.peek() {
            Tok::Sym(s) if ["<=", "<", ">=", ">", "==", "="].contains(s) => *s,
            other => return self.err(format!("expected comparison operator, found {}", describe(other))),
        };
        self.bump();
        let b = self.expr()?;
        Ok(match op {
            "<=" => Cond::le(a, b),
            "<" => Cond::lt(a, b),
            ">=" => Cond::ge(a, b),
            ">" => Cond::gt(a, b),
            _ => Cond::eq(a, b),
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.term()?;
        loop {
            if self.is_sym("+") {
                self.bump();
                let t = self.term()?;
                e = Expr::add(e, t);
            } else if self.is_sym("-") {
                self.bump();
                let t = self.term()?;
                e = Expr::sub(e, t);
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut e = self.factor()?;
        while self.is_sym("*") {
            self.bump();
            let f = self.factor()?;
            e = Expr::mul(e, f);
        }
        Ok(e)
    }

    fn factor(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Num(_) => Ok(Expr::Const(self.number()?)),
            Tok::Sym("-") => {
                if matches!(self.peek_at(1), Tok::Num(_)) {
                    Ok(Expr::Const(self.number()?))
                } else {
                    self.bump();
                    Ok(Expr::neg(self.factor()?))
                }
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(_) => Ok(Expr::Var(self.ident()?)),
            other => self.err(format!("expected expression, found {}", describe(&other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(w) => format!("'{w}'"),
        Tok::Num(n) => format!("number '{n}'"),
        Tok::Sym(s) => format!("'{s}'"),
        Tok::Directive(d) => format!("'@{d}'"),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses a whole program. Semantic errors caught here: unknown call targets,
/// `uniform(a,b)` with `a >= b`, discrete weights not summing to one.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    p.program()
}

/// Parses a standalone condition, e.g. a precondition given on the command line.
pub fn parse_cond(text: &str) -> Result<Cond, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let c = p.cond()?;
    if *p.peek() != Tok::Eof {
        return p.err("trailing input after condition");
    }
    Ok(c)
}

/// Parses a standalone expression.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.err("trailing input after expression");
    }
    Ok(e)
}
