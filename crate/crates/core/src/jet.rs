//! Second-order forward-mode jets over chart coordinates.
//!
//! A [`Jet2`] carries the value, gradient and Hessian of a scalar quantity with
//! respect to the chart coordinates. Every expression, metric component, frame
//! leg and tensor component in this crate can be evaluated either over plain
//! `f64` or over `Jet2`, through the [`Scalar`] trait; evaluating over `Jet2`
//! turns a pointwise computation into a field computation with exact first and
//! second derivatives.
//!
//! The Hessian is stored as a packed upper triangle, so it is symmetric by
//! construction.

use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

/// Elementary function tags understood by jets and the expression evaluator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Log,
    Sqrt,
    Neg,
    Recip,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Neg => "neg",
            Func::Recip => "recip",
        }
    }
}

/// An elementary function was applied outside its domain.
#[derive(Clone, Debug, Error, PartialEq)]
#[error("{} of {arg} is outside the function domain", func.name())]
pub struct DomainError {
    pub func: Func,
    pub arg: f64,
}

/// Common interface for plain reals and jets.
///
/// Constants are created relative to an existing value (`lit`) so that a jet
/// knows which gradient dimension to use; `f64` ignores the receiver.
pub trait Scalar:
    Clone
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Constant with the same shape as `self`.
    fn lit(&self, c: f64) -> Self;
    /// The underlying point value.
    fn val(&self) -> f64;
    /// Multiply by a plain constant.
    fn scale(&self, c: f64) -> Self;
    /// Apply an elementary function with domain checking.
    fn apply(&self, f: Func) -> Result<Self, DomainError>;
    /// Integer power (negative exponents require a nonzero value).
    fn powi(&self, k: i64) -> Result<Self, DomainError>;
    /// Real power; requires a positive base.
    fn powf(&self, e: f64) -> Result<Self, DomainError>;
}

impl Scalar for f64 {
    fn lit(&self, c: f64) -> Self {
        c
    }

    fn val(&self) -> f64 {
        *self
    }

    fn scale(&self, c: f64) -> Self {
        self * c
    }

    fn apply(&self, f: Func) -> Result<Self, DomainError> {
        let x = *self;
        let bad = |func| DomainError { func, arg: x };
        Ok(match f {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return Err(bad(Func::Log));
                }
                x.ln()
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(bad(Func::Sqrt));
                }
                x.sqrt()
            }
            Func::Neg => -x,
            Func::Recip => {
                if x == 0.0 {
                    return Err(bad(Func::Recip));
                }
                1.0 / x
            }
        })
    }

    fn powi(&self, k: i64) -> Result<Self, DomainError> {
        if k < 0 && *self == 0.0 {
            return Err(DomainError {
                func: Func::Recip,
                arg: 0.0,
            });
        }
        Ok(f64::powi(*self, k as i32))
    }

    fn powf(&self, e: f64) -> Result<Self, DomainError> {
        if *self <= 0.0 {
            return Err(DomainError {
                func: Func::Log,
                arg: *self,
            });
        }
        Ok(f64::powf(*self, e))
    }
}

/// Value, gradient and Hessian of a scalar at a chart point.
///
/// `grad` has the chart dimension `d`; `hess` is the packed upper triangle of
/// the symmetric `d x d` Hessian, row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    hess: Vec<f64>,
}

fn pack_len(d: usize) -> usize {
    d * (d + 1) / 2
}

fn pack_idx(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * (2 * d - i + 1) / 2 + (j - i)
}

impl Jet2 {
    /// Constant jet: zero gradient and Hessian.
    pub fn constant(d: usize, value: f64) -> Self {
        Jet2 {
            value,
            grad: vec![0.0; d],
            hess: vec![0.0; pack_len(d)],
        }
    }

    /// Coordinate jet: `value = point[index]`, gradient the unit vector, zero Hessian.
    pub fn lift(index: usize, point: &[f64]) -> Self {
        assert!(
            index < point.len(),
            "coordinate index {index} out of range for dimension {}",
            point.len()
        );
        let mut j = Jet2::constant(point.len(), point[index]);
        j.grad[index] = 1.0;
        j
    }

    /// Lift a full point to its vector of coordinate jets.
    pub fn lift_point(point: &[f64]) -> Vec<Jet2> {
        (0..point.len()).map(|i| Jet2::lift(i, point)).collect()
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    /// Hessian entry `(i, j)`; symmetric by storage.
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[pack_idx(self.dim(), i, j)]
    }

    /// Dense copy of the Hessian.
    pub fn hess_matrix(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.hess(i, j)).collect())
            .collect()
    }

    /// Directional first derivative along `w`.
    pub fn dir_deriv(&self, w: &[f64]) -> f64 {
        self.grad.iter().zip(w).map(|(g, w)| g * w).sum()
    }

    /// Partial derivative of this jet field with respect to coordinate `d`.
    ///
    /// The result is exact to first order only: its value and gradient come
    /// from this jet's gradient and Hessian, while its own Hessian (a third
    /// derivative of the original field) is set to zero. Callers must not
    /// differentiate the result again.
    pub fn d(&self, dir: usize) -> Jet2 {
        let d = self.dim();
        let mut out = Jet2::constant(d, self.grad[dir]);
        for k in 0..d {
            out.grad[k] = self.hess(dir, k);
        }
        out
    }

    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let d = self.dim();
        let mut out = Jet2::constant(d, f0);
        for k in 0..d {
            out.grad[k] = f1 * self.grad[k];
        }
        let mut idx = 0;
        for i in 0..d {
            for j in i..d {
                out.hess[idx] = f1 * self.hess[idx] + f2 * self.grad[i] * self.grad[j];
                idx += 1;
            }
        }
        out
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(mut self, rhs: Jet2) -> Jet2 {
        debug_assert_eq!(self.dim(), rhs.dim());
        self.value += rhs.value;
        for (a, b) in self.grad.iter_mut().zip(&rhs.grad) {
            *a += b;
        }
        for (a, b) in self.hess.iter_mut().zip(&rhs.hess) {
            *a += b;
        }
        self
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(mut self, rhs: Jet2) -> Jet2 {
        debug_assert_eq!(self.dim(), rhs.dim());
        self.value -= rhs.value;
        for (a, b) in self.grad.iter_mut().zip(&rhs.grad) {
            *a -= b;
        }
        for (a, b) in self.hess.iter_mut().zip(&rhs.hess) {
            *a -= b;
        }
        self
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        let d = self.dim();
        debug_assert_eq!(d, rhs.dim());
        let mut out = Jet2::constant(d, self.value * rhs.value);
        for k in 0..d {
            out.grad[k] = self.grad[k] * rhs.value + self.value * rhs.grad[k];
        }
        let mut idx = 0;
        for i in 0..d {
            for j in i..d {
                out.hess[idx] = self.hess[idx] * rhs.value
                    + self.value * rhs.hess[idx]
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i];
                idx += 1;
            }
        }
        out
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(mut self) -> Jet2 {
        self.value = -self.value;
        for a in self.grad.iter_mut() {
            *a = -*a;
        }
        for a in self.hess.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    /// IEEE semantics: a zero divisor propagates infinities. Use
    /// [`Scalar::apply`] with [`Func::Recip`] for a checked reciprocal.
    fn div(self, rhs: Jet2) -> Jet2 {
        let v = rhs.value;
        let r = rhs.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
        self * r
    }
}

impl Scalar for Jet2 {
    fn lit(&self, c: f64) -> Self {
        Jet2::constant(self.dim(), c)
    }

    fn val(&self) -> f64 {
        self.value
    }

    fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.value *= c;
        for a in out.grad.iter_mut() {
            *a *= c;
        }
        for a in out.hess.iter_mut() {
            *a *= c;
        }
        out
    }

    fn apply(&self, f: Func) -> Result<Self, DomainError> {
        let x = self.value;
        let bad = |func| DomainError { func, arg: x };
        Ok(match f {
            Func::Sin => self.chain(x.sin(), x.cos(), -x.sin()),
            Func::Cos => self.chain(x.cos(), -x.sin(), -x.cos()),
            Func::Sinh => self.chain(x.sinh(), x.cosh(), x.sinh()),
            Func::Cosh => self.chain(x.cosh(), x.sinh(), x.cosh()),
            Func::Exp => {
                let e = x.exp();
                self.chain(e, e, e)
            }
            Func::Log => {
                if x <= 0.0 {
                    return Err(bad(Func::Log));
                }
                self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(bad(Func::Sqrt));
                }
                let s = x.sqrt();
                self.chain(s, 0.5 / s, -0.25 / (s * x))
            }
            Func::Neg => -self.clone(),
            Func::Recip => {
                if x == 0.0 {
                    return Err(bad(Func::Recip));
                }
                self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
            }
        })
    }

    fn powi(&self, k: i64) -> Result<Self, DomainError> {
        let x = self.value;
        if k < 0 && x == 0.0 {
            return Err(DomainError {
                func: Func::Recip,
                arg: 0.0,
            });
        }
        let kf = k as f64;
        Ok(match k {
            0 => self.lit(1.0),
            1 => self.clone(),
            _ => self.chain(
                x.powi(k as i32),
                kf * x.powi(k as i32 - 1),
                kf * (kf - 1.0) * x.powi(k as i32 - 2),
            ),
        })
    }

    fn powf(&self, e: f64) -> Result<Self, DomainError> {
        let x = self.value;
        if x <= 0.0 {
            return Err(DomainError {
                func: Func::Log,
                arg: x,
            });
        }
        Ok(self.chain(
            x.powf(e),
            e * x.powf(e - 1.0),
            e * (e - 1.0) * x.powf(e - 2.0),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn lift_is_coordinate_jet() {
        let p = [2.0, 3.0];
        let x0 = Jet2::lift(0, &p);
        assert_eq!(x0.value, 2.0);
        assert_eq!(x0.grad, vec![1.0, 0.0]);
        assert_eq!(x0.hess_matrix(), vec![vec![0.0, 0.0], vec![0.0, 0.0]]);

        let x1 = Jet2::lift(1, &p);
        assert_eq!(x1.value, 3.0);
        assert_eq!(x1.grad, vec![0.0, 1.0]);
    }

    #[test]
    fn square_of_coordinate() {
        let p = [2.0, 3.0];
        let x0 = Jet2::lift(0, &p);
        let sq = x0.clone() * x0;
        assert_eq!(sq.value, 4.0);
        assert_eq!(sq.grad, vec![4.0, 0.0]);
        assert_eq!(sq.hess(0, 0), 2.0);
        assert_eq!(sq.hess(0, 1), 0.0);
        assert_eq!(sq.hess(1, 1), 0.0);
    }

    #[test]
    fn exp_cosh_log_at_reference_points() {
        let p = [0.0, 0.0];
        let x = Jet2::lift(0, &p);

        let e = x.apply(Func::Exp).unwrap();
        assert!(close(e.value, 1.0, 1e-15));
        assert!(close(e.grad[0], 1.0, 1e-15));
        assert!(close(e.hess(0, 0), 1.0, 1e-15));

        let c = x.apply(Func::Cosh).unwrap();
        assert!(close(c.value, 1.0, 1e-15));
        assert!(close(c.grad[0], 0.0, 1e-15));
        assert!(close(c.hess(0, 0), 1.0, 1e-15));

        let p1 = [1.0, 0.0];
        let x1 = Jet2::lift(0, &p1);
        let l = x1.apply(Func::Log).unwrap();
        assert!(close(l.value, 0.0, 1e-15));
        assert!(close(l.grad[0], 1.0, 1e-15));
        assert!(close(l.hess(0, 0), -1.0, 1e-15));
        assert!(close(l.hess(0, 1), 0.0, 1e-15));
    }

    #[test]
    fn domain_violations_are_reported() {
        let p = [-1.0];
        let x = Jet2::lift(0, &p);
        assert!(x.apply(Func::Log).is_err());
        assert!(x.apply(Func::Sqrt).is_err());
        let z = Jet2::constant(1, 0.0);
        assert!(z.apply(Func::Recip).is_err());
        assert_eq!(
            Jet2::constant(1, 0.0).apply(Func::Recip).unwrap_err(),
            DomainError {
                func: Func::Recip,
                arg: 0.0
            }
        );
    }

    #[test]
    fn division_matches_reciprocal_multiplication() {
        let p = [0.7, -0.3];
        let a = Jet2::lift(0, &p).apply(Func::Sin).unwrap();
        let b = Jet2::lift(1, &p).apply(Func::Cosh).unwrap();
        let q1 = a.clone() / b.clone();
        let q2 = a * b.apply(Func::Recip).unwrap();
        assert!(close(q1.value, q2.value, 1e-15));
        for k in 0..2 {
            assert!(close(q1.grad[k], q2.grad[k], 1e-14));
        }
    }

    #[test]
    fn field_derivative_drops_one_order() {
        // f = x^2 y; df/dx = 2xy with gradient (2y, 2x) and zero stored Hessian.
        let p = [1.5, -2.0];
        let x = Jet2::lift(0, &p);
        let y = Jet2::lift(1, &p);
        let f = x.clone() * x * y;
        let fx = f.d(0);
        assert!(close(fx.value, 2.0 * 1.5 * -2.0, 1e-14));
        assert!(close(fx.grad[0], 2.0 * -2.0, 1e-14));
        assert!(close(fx.grad[1], 2.0 * 1.5, 1e-14));
        assert_eq!(fx.hess(0, 0), 0.0);
    }
}
