//! Expression trees for metric components, projection maps and scalar fields.
//!
//! Expressions are evaluated generically over any [`Scalar`], so the same AST
//! yields plain values or second-order jets. They also support exact symbolic
//! differentiation, which is how the crate obtains derivative orders beyond
//! what a single jet evaluation carries (for example derivatives of the
//! projection map inside frame fields).

use std::fmt;

use crate::jet::{DomainError, Func, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// AST node. Coordinates carry both their chart index and their source name.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord { index: usize, name: Box<str> },
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// Power with a constant exponent (the grammar forbids coordinate-dependent exponents).
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

/// Evaluation failure, carrying the offending subexpression and point.
#[derive(Clone, Debug, thiserror::Error, PartialEq)]
#[error("{source} in `{path}` at point {point:?}")]
pub struct EvalError {
    #[source]
    pub source: DomainError,
    pub path: String,
    pub point: Vec<f64>,
}

impl Expr {
    pub fn coord(index: usize, name: &str) -> Expr {
        Expr::Coord {
            index,
            name: name.into(),
        }
    }

    /// Evaluate over any scalar type. `x` must have at least one entry; its
    /// first element supplies the shape for constants.
    pub fn eval<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
        assert!(!x.is_empty(), "cannot evaluate over an empty point");
        let fail = |e: DomainError, node: &Expr| EvalError {
            source: e,
            path: node.to_string(),
            point: x.iter().map(|s| s.val()).collect(),
        };
        Ok(match self {
            Expr::Const(c) => x[0].lit(*c),
            Expr::Coord { index, .. } => x[*index].clone(),
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Bin(op, a, b) => {
                let a = a.eval(x)?;
                let b = b.eval(x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        // Checked reciprocal keeps division errors reportable.
                        let r = b.apply(Func::Recip).map_err(|e| fail(e, self))?;
                        a * r
                    }
                }
            }
            Expr::Pow(a, e) => {
                let a = a.eval(x)?;
                if e.fract() == 0.0 && e.abs() <= 64.0 {
                    a.powi(*e as i64).map_err(|err| fail(err, self))?
                } else {
                    a.powf(*e).map_err(|err| fail(err, self))?
                }
            }
            Expr::Call(f, a) => {
                let a = a.eval(x)?;
                a.apply(*f).map_err(|e| fail(e, self))?
            }
        })
    }

    /// Exact partial derivative with respect to coordinate `i`.
    pub fn diff(&self, i: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Coord { index, .. } => Expr::Const(if *index == i { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff(i)),
            Expr::Bin(op, a, b) => match op {
                BinOp::Add => add(a.diff(i), b.diff(i)),
                BinOp::Sub => sub(a.diff(i), b.diff(i)),
                BinOp::Mul => add(
                    mul(a.diff(i), (**b).clone()),
                    mul((**a).clone(), b.diff(i)),
                ),
                BinOp::Div => div(
                    sub(
                        mul(a.diff(i), (**b).clone()),
                        mul((**a).clone(), b.diff(i)),
                    ),
                    pow((**b).clone(), 2.0),
                ),
            },
            Expr::Pow(a, e) => mul(
                mul(Expr::Const(*e), pow((**a).clone(), e - 1.0)),
                a.diff(i),
            ),
            Expr::Call(f, a) => {
                let da = a.diff(i);
                let a = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Sinh => call(Func::Cosh, a),
                    Func::Cosh => call(Func::Sinh, a),
                    Func::Exp => call(Func::Exp, a),
                    Func::Log => div(Expr::Const(1.0), a),
                    Func::Sqrt => div(Expr::Const(0.5), call(Func::Sqrt, a)),
                    Func::Neg => Expr::Const(-1.0),
                    Func::Recip => neg(div(Expr::Const(1.0), pow(a, 2.0))),
                };
                mul(outer, da)
            }
        }
    }

    /// Replace coordinate `index` by a constant and shift every coordinate
    /// above it down by one. Used to restrict a metric block to a fibre slice.
    pub fn substitute_and_shift(&self, index: usize, value: f64) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Coord { index: k, name } => {
                if *k == index {
                    Expr::Const(value)
                } else if *k > index {
                    Expr::Coord {
                        index: k - 1,
                        name: name.clone(),
                    }
                } else {
                    self.clone()
                }
            }
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute_and_shift(index, value))),
            Expr::Bin(op, a, b) => Expr::Bin(
                *op,
                Box::new(a.substitute_and_shift(index, value)),
                Box::new(b.substitute_and_shift(index, value)),
            ),
            Expr::Pow(a, e) => Expr::Pow(Box::new(a.substitute_and_shift(index, value)), *e),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute_and_shift(index, value))),
        }
    }

    /// True if the expression references no coordinate.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Coord { .. } => false,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.is_constant(),
            Expr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Const(c) if *c < 0.0 => 1,
            Expr::Const(_) | Expr::Coord { .. } | Expr::Call(..) => 4,
            Expr::Pow(..) => 3,
            Expr::Neg(_) => 2,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 1,
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 0,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let p = self.precedence();
        if p < min {
            write!(f, "(")?;
        }
        match self {
            Expr::Const(c) => write!(f, "{c}")?,
            Expr::Coord { name, .. } => write!(f, "{name}")?,
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_prec(f, 2)?;
            }
            Expr::Bin(op, a, b) => {
                let (sym, lp, rp) = match op {
                    BinOp::Add => (" + ", 0, 0),
                    BinOp::Sub => (" - ", 0, 1),
                    BinOp::Mul => ("*", 1, 1),
                    BinOp::Div => ("/", 1, 2),
                };
                a.fmt_prec(f, lp)?;
                write!(f, "{sym}")?;
                b.fmt_prec(f, rp)?;
            }
            Expr::Pow(a, e) => {
                a.fmt_prec(f, 4)?;
                if *e < 0.0 {
                    write!(f, "^({e})")?;
                } else {
                    write!(f, "^{e}")?;
                }
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if p < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

// Folding constructors keep symbolic derivatives from blowing up.

pub fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (Expr::Const(x), _) if *x == 0.0 => b,
        (_, Expr::Const(y)) if *y == 0.0 => a,
        _ => Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        (_, Expr::Const(y)) if *y == 0.0 => a,
        (Expr::Const(x), _) if *x == 0.0 => neg(b),
        _ => Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (Expr::Const(x), _) if *x == 0.0 => Expr::Const(0.0),
        (_, Expr::Const(y)) if *y == 0.0 => Expr::Const(0.0),
        (Expr::Const(x), _) if *x == 1.0 => b,
        (_, Expr::Const(y)) if *y == 1.0 => a,
        _ => Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), _) if *x == 0.0 => Expr::Const(0.0),
        (_, Expr::Const(y)) if *y == 1.0 => a,
        (Expr::Const(x), Expr::Const(y)) if *y != 0.0 => Expr::Const(x / y),
        _ => Expr::Bin(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(-x),
        Expr::Neg(inner) => *inner,
        _ => Expr::Neg(Box::new(a)),
    }
}

pub fn pow(a: Expr, e: f64) -> Expr {
    if e == 0.0 {
        Expr::Const(1.0)
    } else if e == 1.0 {
        a
    } else if let Expr::Const(x) = a {
        Expr::Const(x.powf(e))
    } else {
        Expr::Pow(Box::new(a), e)
    }
}

pub fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet2;

    fn t() -> Expr {
        Expr::coord(0, "t")
    }

    #[test]
    fn eval_cosh_squared() {
        // cosh(t)^2 at t = 0 -> 1
        let e = pow(call(Func::Cosh, t()), 2.0);
        let v: f64 = e.eval(&[0.0]).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn eval_shifted_cosine() {
        // 2 + cos(theta) at theta = pi -> 1
        let e = add(Expr::Const(2.0), call(Func::Cos, Expr::coord(0, "theta")));
        let v: f64 = e.eval(&[std::f64::consts::PI]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jet_of_negative_cosh_squared() {
        // -cosh(t)^2 at t = 0: value -1, d/dt 0, d2/dt2 -2
        let e = neg(pow(call(Func::Cosh, t()), 2.0));
        let j: Jet2 = e.eval(&Jet2::lift_point(&[0.0])).unwrap();
        assert!((j.value + 1.0).abs() < 1e-15);
        assert!(j.grad[0].abs() < 1e-15);
        assert!((j.hess(0, 0) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn jet_value_matches_plain_eval_exactly() {
        let e = div(
            call(Func::Sin, mul(Expr::Const(3.0), t())),
            add(Expr::Const(2.0), call(Func::Cos, t())),
        );
        for &p in &[0.1, 0.9, 2.4, -1.3] {
            let plain: f64 = e.eval(&[p]).unwrap();
            let jet: Jet2 = e.eval(&Jet2::lift_point(&[p])).unwrap();
            assert_eq!(plain, jet.value);
        }
    }

    #[test]
    fn symbolic_derivative_matches_jet_gradient() {
        let e = mul(
            pow(call(Func::Cosh, t()), 2.0),
            call(Func::Sin, Expr::coord(1, "x")),
        );
        let d0 = e.diff(0);
        let d1 = e.diff(1);
        for &(a, b) in &[(0.3, 1.1), (-0.8, 2.0)] {
            let j: Jet2 = e.eval(&Jet2::lift_point(&[a, b])).unwrap();
            let v0: f64 = d0.eval(&[a, b]).unwrap();
            let v1: f64 = d1.eval(&[a, b]).unwrap();
            assert!((j.grad[0] - v0).abs() < 1e-12);
            assert!((j.grad[1] - v1).abs() < 1e-12);
        }
    }

    #[test]
    fn eval_error_carries_path_and_point() {
        let e = call(Func::Log, t());
        let err = e.eval(&[-2.0_f64]).unwrap_err();
        assert!(err.path.contains("log"));
        assert_eq!(err.point, vec![-2.0]);
    }
}
