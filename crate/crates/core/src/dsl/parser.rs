//! Recursive-descent parser for manifold and submersion definitions.
//!
//! Grammar (statements are newline- or semicolon-separated; `#` starts a
//! comment):
//!
//! ```text
//! file       := (manifold | submersion)*
//! manifold   := "manifold" NAME "{" "dim" INT "signature" INT "coords" NAME+
//!               ("periodic" NAME NUMBER)* ("domain" NAME "in" "[" NUMBER "," NUMBER "]")*
//!               "metric" "{" gentry* "}" "}"
//! gentry     := "g" "[" INT "]" "[" INT "]" "=" expr
//! submersion := "submersion" NAME "{" "total" NAME ";" "base" NAME ";"
//!               "map" "{" (NAME "=" expr)* "}" ("aligned" BOOL)? "}"
//! ```
//!
//! Expressions use infix notation with precedence `^` > unary `-` > `*` `/`
//! > `+` `-`, the functions `sin cos sinh cosh exp log sqrt`, and constants
//! `pi` and `e`. Exponents must be constant.

use std::collections::HashMap;

use super::ast::{add, call, div, mul, neg, pow, sub, Expr};
use super::lexer::{lex, Diagnostic, Tok, Token};
use crate::jet::Func;

/// Raw parsed manifold, before semantic validation.
#[derive(Clone, Debug)]
pub struct ManifoldAst {
    pub name: String,
    pub dim: usize,
    pub signature: usize,
    pub coords: Vec<String>,
    pub periodic: Vec<(String, f64, u32, u32)>,
    pub domain: Vec<(String, f64, f64, u32, u32)>,
    /// (row, col, expr, line, col)
    pub entries: Vec<(usize, usize, Expr, u32, u32)>,
    pub line: u32,
    pub col: u32,
}

#[derive(Clone, Debug)]
pub struct SubmersionAst {
    pub name: String,
    pub total: String,
    pub base: String,
    /// (base coordinate name, expr in total coordinates, line, col)
    pub map: Vec<(String, Expr, u32, u32)>,
    pub aligned: Option<bool>,
    pub line: u32,
    pub col: u32,
}

#[derive(Clone, Debug, Default)]
pub struct FileAst {
    pub manifolds: Vec<ManifoldAst>,
    pub submersions: Vec<SubmersionAst>,
}

const RESERVED_IN_EXPR: &[&str] = &[
    "pi", "e", "sin", "cos", "sinh", "cosh", "exp", "log", "sqrt",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> Diagnostic {
        let t = self.peek();
        Diagnostic::new(t.line, t.col, msg)
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, Diagnostic> {
        if self.peek().tok == tok {
            Ok(self.next())
        } else {
            Err(self.err(format!("expected {tok}, found {}", self.peek().tok)))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<Token, Diagnostic> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => Ok(self.next()),
            other => Err(self.err(format!("expected `{kw}`, found {other}"))),
        }
    }

    fn accept_kw(&mut self, kw: &str) -> bool {
        if matches!(&self.peek().tok, Tok::Ident(s) if s == kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, u32, u32), Diagnostic> {
        match self.peek().tok.clone() {
            Tok::Ident(s) => {
                let t = self.next();
                Ok((s, t.line, t.col))
            }
            other => Err(self.err(format!("expected {what}, found {other}"))),
        }
    }

    fn number(&mut self) -> Result<f64, Diagnostic> {
        // A leading minus is allowed in number positions (domains, periods).
        let mut sign = 1.0;
        if self.peek().tok == Tok::Minus {
            self.next();
            sign = -1.0;
        }
        match self.peek().tok {
            Tok::Number(n) => {
                self.next();
                Ok(sign * n)
            }
            ref other => Err(self.err(format!("expected a number, found {other}"))),
        }
    }

    fn integer(&mut self, what: &str) -> Result<usize, Diagnostic> {
        match self.peek().tok {
            Tok::Number(n) if n.fract() == 0.0 && n >= 0.0 => {
                self.next();
                Ok(n as usize)
            }
            ref other => Err(self.err(format!("expected {what}, found {other}"))),
        }
    }

    fn skip_semis(&mut self) {
        while self.peek().tok == Tok::Semi {
            self.next();
        }
    }

    // ---- expressions ----

    fn expr(&mut self, coords: &HashMap<String, usize>) -> Result<Expr, Diagnostic> {
        self.additive(coords)
    }

    fn additive(&mut self, coords: &HashMap<String, usize>) -> Result<Expr, Diagnostic> {
        let mut lhs = self.multiplicative(coords)?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.next();
                    lhs = add(lhs, self.multiplicative(coords)?);
                }
                Tok::Minus => {
                    self.next();
                    lhs = sub(lhs, self.multiplicative(coords)?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn multiplicative(&mut self, coords: &HashMap<String, usize>) -> Result<Expr, Diagnostic> {
        let mut lhs = self.unary(coords)?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.next();
                    lhs = mul(lhs, self.unary(coords)?);
                }
                Tok::Slash => {
                    self.next();
                    lhs = div(lhs, self.unary(coords)?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self, coords: &HashMap<String, usize>) -> Result<Expr, Diagnostic> {
        if self.peek().tok == Tok::Minus {
            self.next();
            Ok(neg(self.unary(coords)?))
        } else {
            self.power(coords)
        }
    }

    fn power(&mut self, coords: &HashMap<String, usize>) -> Result<Expr, Diagnostic> {
        let base = self.primary(coords)?;
        if self.peek().tok == Tok::Caret {
            let caret = self.next();
            // exponent: primary with optional leading minus, must be constant
            let mut sign = 1.0;
            if self.peek().tok == Tok::Minus {
                self.next();
                sign = -1.0;
            }
            let exp = self.primary(coords)?;
            if !exp.is_constant() {
                return Err(Diagnostic::new(
                    caret.line,
                    caret.col,
                    "exponent must be a constant expression",
                ));
            }
            let e: f64 = exp.eval(&[0.0_f64]).map_err(|err| {
                Diagnostic::new(caret.line, caret.col, format!("bad exponent: {err}"))
            })?;
            return Ok(pow(base, sign * e));
        }
        Ok(base)
    }

    fn primary(&mut self, coords: &HashMap<String, usize>) -> Result<Expr, Diagnostic> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Number(n) => {
                self.next();
                Ok(Expr::Const(n))
            }
            Tok::LParen => {
                self.next();
                let e = self.expr(coords)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.next();
                match name.as_str() {
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    "e" => Ok(Expr::Const(std::f64::consts::E)),
                    "sin" | "cos" | "sinh" | "cosh" | "exp" | "log" | "sqrt" => {
                        self.expect(Tok::LParen)?;
                        let a = self.expr(coords)?;
                        self.expect(Tok::RParen)?;
                        let f = match name.as_str() {
                            "sin" => Func::Sin,
                            "cos" => Func::Cos,
                            "sinh" => Func::Sinh,
                            "cosh" => Func::Cosh,
                            "exp" => Func::Exp,
                            "log" => Func::Log,
                            _ => Func::Sqrt,
                        };
                        Ok(call(f, a))
                    }
                    _ => match coords.get(&name) {
                        Some(&idx) => Ok(Expr::coord(idx, &name)),
                        None => Err(Diagnostic::new(
                            t.line,
                            t.col,
                            format!("unknown coordinate `{name}`"),
                        )),
                    },
                }
            }
            other => Err(self.err(format!("expected an expression, found {other}"))),
        }
    }

    // ---- declarations ----

    fn manifold(&mut self) -> Result<ManifoldAst, Diagnostic> {
        let kw = self.expect_kw("manifold")?;
        let (name, _, _) = self.ident("a manifold name")?;
        self.expect(Tok::LBrace)?;
        self.skip_semis();

        self.expect_kw("dim")?;
        let dim = self.integer("the dimension")?;
        if dim == 0 {
            return Err(self.err("dimension must be positive"));
        }
        self.skip_semis();
        self.expect_kw("signature")?;
        let signature = self.integer("the signature (count of negative eigenvalues)")?;
        self.skip_semis();

        self.expect_kw("coords")?;
        let mut coords = Vec::new();
        while let Tok::Ident(s) = self.peek().tok.clone() {
            if ["periodic", "domain", "metric"].contains(&s.as_str()) {
                break;
            }
            let t = self.next();
            if RESERVED_IN_EXPR.contains(&s.as_str()) {
                return Err(Diagnostic::new(
                    t.line,
                    t.col,
                    format!("`{s}` is reserved and cannot name a coordinate"),
                ));
            }
            coords.push(s);
        }
        self.skip_semis();

        // periodic and domain clauses, in any order
        let mut periodic = Vec::new();
        let mut domain = Vec::new();
        loop {
            if self.accept_kw("periodic") {
                let (cname, l, c) = self.ident("a coordinate name")?;
                let period = self.number()?;
                periodic.push((cname, period, l, c));
                self.skip_semis();
            } else if self.accept_kw("domain") {
                let (cname, l, c) = self.ident("a coordinate name")?;
                self.expect_kw("in")?;
                self.expect(Tok::LBracket)?;
                let lo = self.number()?;
                self.expect(Tok::Comma)?;
                let hi = self.number()?;
                self.expect(Tok::RBracket)?;
                domain.push((cname, lo, hi, l, c));
                self.skip_semis();
            } else {
                break;
            }
        }

        self.expect_kw("metric")?;
        self.expect(Tok::LBrace)?;
        let table: HashMap<String, usize> = coords
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let mut entries = Vec::new();
        loop {
            self.skip_semis();
            if self.peek().tok == Tok::RBrace {
                self.next();
                break;
            }
            let gt = self.expect_kw("g")?;
            self.expect(Tok::LBracket)?;
            let a = self.integer("a metric row index")?;
            self.expect(Tok::RBracket)?;
            self.expect(Tok::LBracket)?;
            let b = self.integer("a metric column index")?;
            self.expect(Tok::RBracket)?;
            self.expect(Tok::Eq)?;
            let e = self.expr(&table)?;
            entries.push((a, b, e, gt.line, gt.col));
        }
        self.skip_semis();
        self.expect(Tok::RBrace)?;

        Ok(ManifoldAst {
            name,
            dim,
            signature,
            coords,
            periodic,
            domain,
            entries,
            line: kw.line,
            col: kw.col,
        })
    }

    fn submersion(&mut self, manifolds: &[ManifoldAst]) -> Result<SubmersionAst, Diagnostic> {
        let kw = self.expect_kw("submersion")?;
        let (name, _, _) = self.ident("a submersion name")?;
        self.expect(Tok::LBrace)?;
        self.skip_semis();

        self.expect_kw("total")?;
        let (total, tl, tc) = self.ident("a manifold name")?;
        self.skip_semis();
        self.expect_kw("base")?;
        let (base, _, _) = self.ident("a manifold name")?;
        self.skip_semis();

        let total_ast = manifolds
            .iter()
            .find(|m| m.name == total)
            .ok_or_else(|| Diagnostic::new(tl, tc, format!("unknown manifold `{total}`")))?;
        let table: HashMap<String, usize> = total_ast
            .coords
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();

        self.expect_kw("map")?;
        self.expect(Tok::LBrace)?;
        let mut map = Vec::new();
        loop {
            self.skip_semis();
            if self.peek().tok == Tok::RBrace {
                self.next();
                break;
            }
            let (target, l, c) = self.ident("a base coordinate name")?;
            self.expect(Tok::Eq)?;
            let e = self.expr(&table)?;
            map.push((target, e, l, c));
        }
        self.skip_semis();

        let aligned = if self.accept_kw("aligned") {
            let (v, l, c) = self.ident("`true` or `false`")?;
            Some(match v.as_str() {
                "true" => true,
                "false" => false,
                _ => return Err(Diagnostic::new(l, c, "expected `true` or `false`")),
            })
        } else {
            None
        };
        self.skip_semis();
        self.expect(Tok::RBrace)?;

        Ok(SubmersionAst {
            name,
            total,
            base,
            map,
            aligned,
            line: kw.line,
            col: kw.col,
        })
    }
}

/// Parse a definition file into raw ASTs.
pub fn parse_file(src: &str) -> Result<FileAst, Diagnostic> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let mut out = FileAst::default();
    loop {
        p.skip_semis();
        match &p.peek().tok {
            Tok::Eof => break,
            Tok::Ident(s) if s == "manifold" => out.manifolds.push(p.manifold()?),
            Tok::Ident(s) if s == "submersion" => {
                let s = p.submersion(&out.manifolds)?;
                out.submersions.push(s);
            }
            other => {
                return Err(p.err(format!(
                    "expected `manifold` or `submersion`, found {other}"
                )))
            }
        }
    }
    Ok(out)
}

/// Parse a standalone expression against a list of coordinate names.
pub fn parse_expr(src: &str, coords: &[String]) -> Result<Expr, Diagnostic> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let table: HashMap<String, usize> = coords
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    let e = p.expr(&table)?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_diagonal_metric() {
        let src = "manifold m { dim 2 signature 1 coords t x \
                   periodic x 6.28 domain t in [-1, 1] \
                   metric { g[0][0] = 1  g[1][1] = -cosh(t)^2 } }";
        let f = parse_file(src).unwrap();
        assert_eq!(f.manifolds.len(), 1);
        let m = &f.manifolds[0];
        assert_eq!(m.dim, 2);
        assert_eq!(m.coords, vec!["t".to_string(), "x".to_string()]);
        assert_eq!(m.entries.len(), 2);
    }

    #[test]
    fn unknown_coordinate_is_positioned() {
        let src = "manifold m { dim 1 signature 0 coords t metric { g[0][0] = u } }";
        let err = parse_file(src).unwrap_err();
        assert!(err.message.contains("unknown coordinate `u`"));
    }

    #[test]
    fn coordinate_dependent_exponent_rejected() {
        let src = "manifold m { dim 1 signature 0 coords t metric { g[0][0] = 2^t } }";
        let err = parse_file(src).unwrap_err();
        assert!(err.message.contains("constant"));
    }

    #[test]
    fn precedence_is_standard() {
        let coords = vec!["t".to_string()];
        let e = parse_expr("-t^2 + 2*t/4", &coords).unwrap();
        // -(t^2) + (2t)/4 at t=3: -9 + 1.5
        let v: f64 = e.eval(&[3.0]).unwrap();
        assert!((v - (-7.5)).abs() < 1e-15);
    }

    #[test]
    fn pi_and_e_are_constants() {
        let e = parse_expr("pi + e", &[]).unwrap();
        let v: f64 = e.eval(&[0.0_f64]).unwrap();
        assert!((v - (std::f64::consts::PI + std::f64::consts::E)).abs() < 1e-15);
    }

    #[test]
    fn display_round_trips() {
        let coords = vec!["t".to_string(), "x".to_string()];
        for src in [
            "-cosh(t)^2",
            "(t + x)*(t - x)/(2 + cos(t))",
            "sqrt(1 + t^2) - sin(x)^-2",
            "t - (x - 1) - 2/(t/4)",
        ] {
            let e = parse_expr(src, &coords).unwrap();
            let printed = e.to_string();
            let re = parse_expr(&printed, &coords)
                .unwrap_or_else(|d| panic!("reparse of `{printed}` failed: {d}"));
            assert_eq!(e, re, "round-trip of `{src}` via `{printed}`");
        }
    }
}
