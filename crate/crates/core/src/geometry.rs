//! Levi-Civita connection and curvature of a chart at a point.
//!
//! Sign conventions: with `R(E,F)G = nabla_E nabla_F G - nabla_F nabla_E G -
//! nabla_{[E,F]} G` the quadrilinear form is `R(E,F,G,G') = -g(R(E,F)G, G')`,
//! and the sectional curvature `K = R(E,F,E,F) / (g(E,E)g(F,F) - g(E,F)^2)`
//! gives +1 on the unit round sphere. A dedicated calibration test freezes
//! this choice.
//!
//! This module evaluates the metric with jets once and then works with plain
//! arrays; it is the "curvature engine" side of every dual-route residual
//! check, deliberately separate from the frame pipeline.

use crate::dsl::ast::Expr;
use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::linalg;
use crate::manifold::{Chart, DET_FLOOR};

/// Plane-degeneracy tolerance for sectional curvature.
pub const PLANE_FLOOR: f64 = 1e-10;

/// Metric data at a point: value, inverse, first and second derivatives.
#[derive(Clone, Debug)]
pub struct MetricAtPoint {
    pub dim: usize,
    pub g: Vec<Vec<f64>>,
    pub g_inv: Vec<Vec<f64>>,
    pub det: f64,
    /// `dg[c][a][b]` = c-derivative of `g_ab`.
    pub dg: Vec<Vec<Vec<f64>>>,
    /// `d2g[c][d][a][b]` = (c,d)-second derivative of `g_ab`.
    pub d2g: Vec<Vec<Vec<Vec<f64>>>>,
}

impl MetricAtPoint {
    pub fn compute(chart: &Chart, x: &[f64]) -> Result<MetricAtPoint> {
        let m = chart.dim;
        let jets = chart.lift(x);
        let mut g = vec![vec![0.0; m]; m];
        let mut dg = vec![vec![vec![0.0; m]; m]; m];
        let mut d2g = vec![vec![vec![vec![0.0; m]; m]; m]; m];
        for a in 0..m {
            for b in a..m {
                let j: Jet2 = chart.metric[a][b].eval(&jets)?;
                g[a][b] = j.value;
                g[b][a] = j.value;
                for c in 0..m {
                    dg[c][a][b] = j.grad[c];
                    dg[c][b][a] = j.grad[c];
                    for d in 0..m {
                        let h = j.hess(c, d);
                        d2g[c][d][a][b] = h;
                        d2g[c][d][b][a] = h;
                    }
                }
            }
        }
        let det = linalg::det(&g);
        if det.abs() < DET_FLOOR {
            return Err(Error::DegenerateMetric {
                point: x.to_vec(),
                det,
            });
        }
        let g_inv = linalg::inverse(&g, DET_FLOOR).ok_or(Error::DegenerateMetric {
            point: x.to_vec(),
            det,
        })?;
        Ok(MetricAtPoint {
            dim: m,
            g,
            g_inv,
            det,
            dg,
            d2g,
        })
    }

    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for a in 0..self.dim {
            for b in 0..self.dim {
                acc += self.g[a][b] * u[a] * v[b];
            }
        }
        acc
    }
}

/// Connection and curvature data at a point.
#[derive(Clone, Debug)]
pub struct CurvatureAtPoint {
    pub point: Vec<f64>,
    pub metric: MetricAtPoint,
    /// `gamma[c][a][b]`.
    pub gamma: Vec<Vec<Vec<f64>>>,
    /// `dgamma[d][c][a][b]` = d-derivative of `gamma[c][a][b]`.
    pub dgamma: Vec<Vec<Vec<Vec<f64>>>>,
    /// Mixed components: `R(d_a, d_b) d_c = rmix[d][c][a][b] d_d`.
    pub rmix: Vec<Vec<Vec<Vec<f64>>>>,
}

impl CurvatureAtPoint {
    pub fn compute(chart: &Chart, x: &[f64]) -> Result<CurvatureAtPoint> {
        let metric = MetricAtPoint::compute(chart, x)?;
        let m = metric.dim;
        let gi = &metric.g_inv;
        let dg = &metric.dg;
        let d2g = &metric.d2g;

        // d_e g^{cd} = -g^{cf} (d_e g_{fh}) g^{hd}
        let mut dginv = vec![vec![vec![0.0; m]; m]; m];
        for e in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let mut acc = 0.0;
                    for f in 0..m {
                        for h in 0..m {
                            acc -= gi[c][f] * dg[e][f][h] * gi[h][d];
                        }
                    }
                    dginv[e][c][d] = acc;
                }
            }
        }

        let mut gamma = vec![vec![vec![0.0; m]; m]; m];
        let mut dgamma = vec![vec![vec![vec![0.0; m]; m]; m]; m];
        for c in 0..m {
            for a in 0..m {
                for b in 0..m {
                    let mut acc = 0.0;
                    for d in 0..m {
                        acc += gi[c][d] * (dg[a][d][b] + dg[b][d][a] - dg[d][a][b]);
                    }
                    gamma[c][a][b] = 0.5 * acc;
                    for e in 0..m {
                        let mut dacc = 0.0;
                        for d in 0..m {
                            dacc += dginv[e][c][d] * (dg[a][d][b] + dg[b][d][a] - dg[d][a][b])
                                + gi[c][d]
                                    * (d2g[e][a][d][b] + d2g[e][b][d][a] - d2g[e][d][a][b]);
                        }
                        dgamma[e][c][a][b] = 0.5 * dacc;
                    }
                }
            }
        }

        // R(d_a, d_b) d_c = [d_a Gamma^d_bc - d_b Gamma^d_ac
        //                    + Gamma^e_bc Gamma^d_ae - Gamma^e_ac Gamma^d_be] d_d
        let mut rmix = vec![vec![vec![vec![0.0; m]; m]; m]; m];
        for d in 0..m {
            for c in 0..m {
                for a in 0..m {
                    for b in 0..m {
                        let mut acc = dgamma[a][d][b][c] - dgamma[b][d][a][c];
                        for e in 0..m {
                            acc += gamma[e][b][c] * gamma[d][a][e]
                                - gamma[e][a][c] * gamma[d][b][e];
                        }
                        rmix[d][c][a][b] = acc;
                    }
                }
            }
        }

        Ok(CurvatureAtPoint {
            point: x.to_vec(),
            metric,
            gamma,
            dgamma,
            rmix,
        })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim
    }

    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        self.metric.dot(u, v)
    }

    /// The vector `R(E,F)G`.
    pub fn riemann_vector(&self, e: &[f64], f: &[f64], g: &[f64]) -> Vec<f64> {
        let m = self.dim();
        let mut out = vec![0.0; m];
        for d in 0..m {
            let mut acc = 0.0;
            for a in 0..m {
                if e[a] == 0.0 {
                    continue;
                }
                for b in 0..m {
                    if f[b] == 0.0 {
                        continue;
                    }
                    for c in 0..m {
                        acc += e[a] * f[b] * g[c] * self.rmix[d][c][a][b];
                    }
                }
            }
            out[d] = acc;
        }
        out
    }

    /// Quadrilinear curvature `R(E,F,G,G') = -g(R(E,F)G, G')`.
    pub fn riemann(&self, e: &[f64], f: &[f64], g: &[f64], g2: &[f64]) -> f64 {
        let v = self.riemann_vector(e, f, g);
        -self.dot(&v, g2)
    }

    /// Sectional curvature of the plane spanned by `e`, `f`.
    pub fn sectional(&self, e: &[f64], f: &[f64]) -> Result<f64> {
        let denom = self.dot(e, e) * self.dot(f, f) - self.dot(e, f).powi(2);
        if denom.abs() <= PLANE_FLOOR {
            return Err(Error::DegeneratePlane {
                point: self.point.clone(),
                denom: denom.abs(),
            });
        }
        Ok(self.riemann(e, f, e, f) / denom)
    }

    /// Ricci tensor as the signed frame trace, evaluated frame-independently
    /// through the inverse metric: `rho(E,F) = g^{cd} R(d_c, E, d_d, F)`.
    pub fn ricci(&self, e: &[f64], f: &[f64]) -> f64 {
        let m = self.dim();
        let mut acc = 0.0;
        for c in 0..m {
            let ec: Vec<f64> = (0..m).map(|i| if i == c { 1.0 } else { 0.0 }).collect();
            let v = self.riemann_vector(&ec, e, f);
            // R(d_c, E, d_d, F) = -R(d_c, E, F, d_d) = +g(R(d_c,E)F, d_d)
            for d in 0..m {
                let mut gd = 0.0;
                for k in 0..m {
                    gd += self.metric.g[d][k] * v[k];
                }
                acc += self.metric.g_inv[c][d] * gd;
            }
        }
        acc
    }

    /// Scalar curvature: signed trace of the Ricci tensor.
    pub fn scalar(&self) -> f64 {
        let m = self.dim();
        let mut acc = 0.0;
        for a in 0..m {
            let ea: Vec<f64> = (0..m).map(|i| if i == a { 1.0 } else { 0.0 }).collect();
            for b in 0..m {
                let eb: Vec<f64> = (0..m).map(|i| if i == b { 1.0 } else { 0.0 }).collect();
                acc += self.metric.g_inv[a][b] * self.ricci(&ea, &eb);
            }
        }
        acc
    }

    /// Gradient of a scalar expression: `g^{ab} d_b f d_a`.
    pub fn gradient(&self, chart: &Chart, f: &Expr) -> Result<Vec<f64>> {
        let jets = chart.lift(&self.point);
        let j: Jet2 = f.eval(&jets)?;
        Ok(self.raise(&j.grad))
    }

    /// Raise an index with the inverse metric.
    pub fn raise(&self, covector: &[f64]) -> Vec<f64> {
        let m = self.dim();
        (0..m)
            .map(|a| (0..m).map(|b| self.metric.g_inv[a][b] * covector[b]).sum())
            .collect()
    }

    /// Divergence of a jet-evaluable vector field by the coordinate formula
    /// `div E = d_a E^a + Gamma^a_{a b} E^b`.
    pub fn divergence(&self, field: &[Jet2]) -> f64 {
        let m = self.dim();
        let mut acc = 0.0;
        for a in 0..m {
            acc += field[a].grad[a];
            for b in 0..m {
                acc += self.gamma[a][a][b] * field[b].value;
            }
        }
        acc
    }
}

/// Covariant derivative of a jet-evaluated field along a plain direction.
pub fn nabla(curv: &CurvatureAtPoint, dir: &[f64], field: &[Jet2]) -> Vec<f64> {
    let m = curv.dim();
    let mut out = vec![0.0; m];
    for c in 0..m {
        let mut acc = 0.0;
        for d in 0..m {
            if dir[d] == 0.0 {
                continue;
            }
            let mut v = field[c].grad[d];
            for e in 0..m {
                v += curv.gamma[c][d][e] * field[e].value;
            }
            acc += dir[d] * v;
        }
        out[c] = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::parse_specs;

    fn sphere() -> Chart {
        let src = "manifold s2 { dim 2 signature 0 coords eta phi
            domain eta in [0, 3.141592653589793] periodic phi 6.283185307179586
            metric { g[0][0] = 1  g[1][1] = sin(eta)^2 } }";
        parse_specs(src).unwrap().manifolds[0].chart()
    }

    fn lorentz_torus() -> Chart {
        let src = "manifold t2 { dim 2 signature 1 coords th ph
            periodic th 6.283185307179586 periodic ph 6.283185307179586
            metric { g[0][0] = 1  g[1][1] = -1 } }";
        parse_specs(src).unwrap().manifolds[0].chart()
    }

    fn cosh_strip() -> Chart {
        let src = "manifold w { dim 2 signature 1 coords t x
            domain t in [-2, 2] periodic x 6.283185307179586
            metric { g[0][0] = 1  g[1][1] = -cosh(t)^2 } }";
        parse_specs(src).unwrap().manifolds[0].chart()
    }

    #[test]
    fn flat_metric_has_no_connection_or_curvature() {
        let c = CurvatureAtPoint::compute(&lorentz_torus(), &[1.0, 2.0]).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for d in 0..2 {
                    assert_eq!(c.gamma[d][a][b], 0.0);
                    for e in 0..2 {
                        assert_eq!(c.rmix[d][a][b][e], 0.0);
                    }
                }
            }
        }
        assert_eq!(c.scalar(), 0.0);
    }

    #[test]
    fn warped_christoffels_match_closed_forms() {
        // g = dt^2 - cosh(t)^2 dx^2: Gamma^t_xx = cosh t sinh t, Gamma^x_tx = tanh t.
        let c = CurvatureAtPoint::compute(&cosh_strip(), &[0.5, 1.0]).unwrap();
        let expect_txx = 0.5 * (1.0_f64).sinh(); // cosh(1/2) sinh(1/2) = sinh(1)/2
        assert!((c.gamma[0][1][1] - expect_txx).abs() < 1e-12);
        assert!((c.gamma[1][0][1] - (0.5_f64).tanh()).abs() < 1e-12);
    }

    #[test]
    fn sphere_christoffel_and_sectional() {
        let p = [std::f64::consts::FRAC_PI_4, 1.0];
        let c = CurvatureAtPoint::compute(&sphere(), &p).unwrap();
        // Gamma^eta_{phi phi} = -sin eta cos eta = -1/2 at eta = pi/4
        assert!((c.gamma[0][1][1] + 0.5).abs() < 1e-12);
        let k = c.sectional(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((k - 1.0).abs() < 1e-10, "unit sphere calibration, got {k}");
        assert!((c.scalar() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn cosh_strip_is_constant_curvature_minus_one() {
        for &t in &[0.0, 0.4, -1.1] {
            let c = CurvatureAtPoint::compute(&cosh_strip(), &[t, 0.3]).unwrap();
            let k = c.sectional(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
            assert!((k + 1.0).abs() < 1e-9, "K = {k} at t = {t}");
        }
    }

    #[test]
    fn degenerate_plane_is_refused() {
        // lightlike E = d_th + d_ph on the flat Lorentz torus and F with
        // g(E,F) = 0, g(F,F) = -g(E,E): denominator vanishes.
        let c = CurvatureAtPoint::compute(&lorentz_torus(), &[0.0, 0.0]).unwrap();
        let e = [1.0, 1.0];
        let f = [1.0, 1.0];
        assert!(matches!(
            c.sectional(&e, &f),
            Err(Error::DegeneratePlane { .. })
        ));
    }

    #[test]
    fn riemann_symmetries_and_bianchi_on_sphere() {
        let c = CurvatureAtPoint::compute(&sphere(), &[0.9, 2.0]).unwrap();
        let vs: Vec<Vec<f64>> = vec![vec![0.3, -0.7], vec![1.1, 0.2], vec![-0.4, 0.9], vec![
            0.8, 0.5,
        ]];
        let (e, f, g, h) = (&vs[0], &vs[1], &vs[2], &vs[3]);
        let r = |a: &[f64], b: &[f64], c2: &[f64], d: &[f64]| c.riemann(a, b, c2, d);
        assert!((r(e, f, g, h) + r(f, e, g, h)).abs() < 1e-8);
        assert!((r(e, f, g, h) + r(e, f, h, g)).abs() < 1e-8);
        assert!((r(e, f, g, h) - r(g, h, e, f)).abs() < 1e-8);
        // first Bianchi on the vector level
        let b1 = c.riemann_vector(e, f, g);
        let b2 = c.riemann_vector(f, g, e);
        let b3 = c.riemann_vector(g, e, f);
        for i in 0..2 {
            assert!((b1[i] + b2[i] + b3[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn divergence_of_log_gradient_on_circle() {
        // S^1 with f = 2 + cos(th): div(grad ln f) = (ln f)'' = (-2cos th - 1)/(2+cos th)^2
        let src = "manifold s1 { dim 1 signature 0 coords th periodic th 6.283185307179586
            metric { g[0][0] = 1 } }";
        let spec = &parse_specs(src).unwrap().manifolds[0];
        let chart = spec.chart();
        let f = crate::dsl::parser::parse_expr("log(2 + cos(th))", &spec.coords).unwrap();
        for &th in &[0.3, 1.7, 4.4] {
            let curv = CurvatureAtPoint::compute(&chart, &[th]).unwrap();
            // grad ln f as a jet field
            let jets = chart.lift(&[th]);
            let lf: Jet2 = f.eval(&jets).unwrap();
            let field = vec![lf.d(0)]; // flat 1-dim: grad = derivative
            let div = curv.divergence(&field);
            let expected = (-2.0 * th.cos() - 1.0) / (2.0 + th.cos()).powi(2);
            assert!((div - expected).abs() < 1e-8, "at {th}: {div} vs {expected}");
        }
    }

    #[test]
    fn product_chart_scalar_adds() {
        // S^2 x S^1: scalar = 2 + 0
        let src = "manifold p { dim 3 signature 0 coords eta phi psi
            domain eta in [0, 3.141592653589793] periodic phi 6.283185307179586
            periodic psi 6.283185307179586
            metric { g[0][0] = 1  g[1][1] = sin(eta)^2  g[2][2] = 1 } }";
        let chart = parse_specs(src).unwrap().manifolds[0].chart();
        let c = CurvatureAtPoint::compute(&chart, &[1.1, 0.4, 2.0]).unwrap();
        assert!((c.scalar() - 2.0).abs() < 1e-9);
    }
}
