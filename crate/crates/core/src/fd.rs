//! Central finite-difference references for derivative checks.
//!
//! These go through plain `f64` expression evaluation only, never through
//! jets, so they stay independent of the forward-mode path they are used to
//! check. Default step sizes: 1e-5 for gradients, 1e-4 for Hessians.

use crate::dsl::ast::Expr;
use crate::error::Result;

pub const GRAD_STEP: f64 = 1e-5;
pub const HESS_STEP: f64 = 1e-4;

fn eval_at(e: &Expr, x: &[f64]) -> Result<f64> {
    Ok(e.eval(x)?)
}

pub fn grad_fd(e: &Expr, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let d = x.len();
    let mut out = vec![0.0; d];
    for i in 0..d {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        out[i] = (eval_at(e, &xp)? - eval_at(e, &xm)?) / (2.0 * h);
    }
    Ok(out)
}

pub fn hess_fd(e: &Expr, x: &[f64], h: f64) -> Result<Vec<Vec<f64>>> {
    let d = x.len();
    let f0 = eval_at(e, x)?;
    let mut out = vec![vec![0.0; d]; d];
    for i in 0..d {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        out[i][i] = (eval_at(e, &xp)? - 2.0 * f0 + eval_at(e, &xm)?) / (h * h);
        for j in (i + 1)..d {
            let mut pp = x.to_vec();
            let mut pm = x.to_vec();
            let mut mp = x.to_vec();
            let mut mm = x.to_vec();
            pp[i] += h;
            pp[j] += h;
            pm[i] += h;
            pm[j] -= h;
            mp[i] -= h;
            mp[j] += h;
            mm[i] -= h;
            mm[j] -= h;
            let v = (eval_at(e, &pp)? - eval_at(e, &pm)? - eval_at(e, &mp)? + eval_at(e, &mm)?)
                / (4.0 * h * h);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parser::parse_expr;
    use crate::jet::Jet2;

    #[test]
    fn jet_matches_fd_on_a_composite() {
        let coords = vec!["t".to_string(), "x".to_string()];
        let e = parse_expr("cosh(t)^2 * sin(x) + log(2 + cos(t))", &coords).unwrap();
        let p = [0.7, 1.9];
        let j: Jet2 = e.eval(&Jet2::lift_point(&p)).unwrap();
        let gf = grad_fd(&e, &p, GRAD_STEP).unwrap();
        let hf = hess_fd(&e, &p, HESS_STEP).unwrap();
        for i in 0..2 {
            assert!((j.grad[i] - gf[i]).abs() <= 1e-6 * (1.0 + j.grad[i].abs()));
            for k in 0..2 {
                assert!((j.hess(i, k) - hf[i][k]).abs() <= 1e-4 * (1.0 + j.hess(i, k).abs()));
            }
        }
    }
}
