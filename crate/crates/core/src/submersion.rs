//! The O'Neill apparatus at a point of the total space.
//!
//! Everything here is built from one generic pipeline: adapted frames are
//! constructed by signed Gram-Schmidt inside whichever scalar type the caller
//! evaluates with. Evaluating the pipeline over jets turns the frame into a
//! frame *field* with exact first and second derivatives, which is how
//! covariant derivatives of the fundamental tensors are obtained without any
//! finite differencing.
//!
//! Derivative bookkeeping: chart inputs (metric, its symbolic derivative,
//! projection differential) are exact to second order in jets. One field
//! derivative ([`Jet2::d`]) drops exactness to first order, a second one to
//! value level. The deepest consumers here (`delta_a`, `delta_t`, Killing
//! residuals) sit at value level, so every quantity they read is exact.

use crate::dsl::ast::Expr;
use crate::error::{Error, Result};
use crate::jet::{Jet2, Scalar};
use crate::linalg::{self, Mat};
use crate::manifold::{Chart, SubmersionSpec, INTERIOR_MARGIN};

/// Orthonormality tolerance for adapted frames.
pub const FRAME_TOL: f64 = 1e-9;
/// Axiom (c) residual tolerance: horizontal scalar products must be preserved.
pub const AXIOM_C_TOL: f64 = 1e-8;
/// Threshold on |g(v,v)| for a Euclid-unit vector before it counts as lightlike.
pub const LIGHTLIKE_TOL: f64 = 1e-10;
const SPAN_TOL: f64 = 1e-16;

/// Compiled submersion: charts plus symbolic projection differential.
#[derive(Clone, Debug)]
pub struct SubCtx {
    pub spec: SubmersionSpec,
    pub total: Chart,
    pub base: Chart,
    /// `dmap[k][a]` = exact derivative of the k-th map component by total coordinate a.
    pub dmap: Vec<Vec<Expr>>,
    pub m: usize,
    pub n: usize,
    pub r: usize,
}

impl SubCtx {
    pub fn new(spec: SubmersionSpec) -> SubCtx {
        let m = spec.total.dim;
        let n = spec.base.dim;
        let dmap = spec
            .map
            .iter()
            .map(|e| (0..m).map(|a| e.diff(a)).collect())
            .collect();
        SubCtx {
            total: spec.total.chart(),
            base: spec.base.chart(),
            dmap,
            m,
            n,
            r: m - n,
            spec,
        }
    }

    pub fn base_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.spec.project(x)
    }
}

/// Signed orthonormal frame, vertical legs first.
#[derive(Clone, Debug)]
pub struct Frame<S> {
    pub legs: Vec<Vec<S>>,
    pub eps: Vec<f64>,
    pub r: usize,
}

impl Frame<Jet2> {
    pub fn values(&self) -> Frame<f64> {
        Frame {
            legs: self
                .legs
                .iter()
                .map(|l| l.iter().map(|j| j.value).collect())
                .collect(),
            eps: self.eps.clone(),
            r: self.r,
        }
    }
}

fn gdot<S: Scalar>(g: &Mat<S>, u: &[S], v: &[S]) -> S {
    let m = g.len();
    let mut acc = u[0].lit(0.0);
    for a in 0..m {
        for b in 0..m {
            acc = acc + g[a][b].clone() * u[a].clone() * v[b].clone();
        }
    }
    acc
}

fn edot<S: Scalar>(u: &[S], v: &[S]) -> S {
    linalg::dot(u, v)
}

/// Build the adapted frame by signed Gram-Schmidt: vertical block seeded from
/// the Euclidean orthogonal complement of the projection differential's row
/// space, then horizontal legs from the coordinate fields, all in coordinate
/// order for deterministic output.
pub fn build_frame<S: Scalar>(ctx: &SubCtx, x: &[S]) -> Result<Frame<S>> {
    let (m, n, r) = (ctx.m, ctx.n, ctx.r);
    let zero = x[0].lit(0.0);
    let one = x[0].lit(1.0);
    let point = || x.iter().map(|s| s.val()).collect::<Vec<f64>>();

    let g = ctx.total.metric_at(x)?;

    // dp[k][a]
    let mut dp: Mat<S> = Vec::with_capacity(n);
    for k in 0..n {
        let mut row = Vec::with_capacity(m);
        for a in 0..m {
            row.push(ctx.dmap[k][a].eval(x)?);
        }
        dp.push(row);
    }

    // Euclidean projector onto ker dp: P = I - dp^T (dp dp^T)^{-1} dp
    let gram = linalg::mat_mul(&dp, &linalg::transpose(&dp));
    let gram_inv = linalg::inverse(&gram, 1e-12).ok_or_else(|| Error::RankDeficient {
        point: point(),
    })?;
    let mut proj: Mat<S> = vec![vec![zero.clone(); m]; m];
    for a in 0..m {
        proj[a][a] = one.clone();
        for b in 0..m {
            let mut acc = zero.clone();
            for k in 0..n {
                for l in 0..n {
                    acc = acc + dp[k][a].clone() * gram_inv[k][l].clone() * dp[l][b].clone();
                }
            }
            proj[a][b] = proj[a][b].clone() - acc;
        }
    }

    // Euclid-orthonormal seeds of the vertical space, in coordinate order.
    let mut seeds: Vec<Vec<S>> = Vec::with_capacity(r);
    for col in 0..m {
        if seeds.len() == r {
            break;
        }
        let mut w: Vec<S> = (0..m).map(|row| proj[row][col].clone()).collect();
        for s in &seeds {
            let c = edot(&w, s);
            for (wi, si) in w.iter_mut().zip(s) {
                *wi = wi.clone() - c.clone() * si.clone();
            }
        }
        let nrm2 = edot(&w, &w);
        if nrm2.val() < SPAN_TOL {
            continue;
        }
        let inv = nrm2.apply(crate::jet::Func::Sqrt).map_err(|_| {
            Error::RankDeficient { point: point() }
        })?;
        let inv = one.clone() / inv;
        seeds.push(w.iter().map(|wi| wi.clone() * inv.clone()).collect());
    }
    if seeds.len() < r {
        return Err(Error::RankDeficient { point: point() });
    }

    let mut legs: Vec<Vec<S>> = Vec::with_capacity(m);
    let mut eps: Vec<f64> = Vec::with_capacity(m);
    let pt = point();

    let push_leg = |legs: &mut Vec<Vec<S>>,
                    eps: &mut Vec<f64>,
                    cand: Vec<S>|
     -> Result<bool> {
        let mut w = cand;
        for (leg, &e) in legs.iter().zip(eps.iter()) {
            let c = gdot(&g, &w, leg).scale(e);
            for (wi, li) in w.iter_mut().zip(leg) {
                *wi = wi.clone() - c.clone() * li.clone();
            }
        }
        let e2 = edot(&w, &w);
        if e2.val() < SPAN_TOL {
            return Ok(false);
        }
        // Euclid-normalize first so the lightlike threshold is scale-free.
        let en = e2
            .apply(crate::jet::Func::Sqrt)
            .expect("euclid norm is positive");
        let w: Vec<S> = w.iter().map(|wi| wi.clone() / en.clone()).collect();
        let gn = gdot(&g, &w, &w);
        let gval = gn.val();
        if gval.abs() < LIGHTLIKE_TOL {
            return Err(Error::DegenerateVerticalMetric {
                point: pt.clone(),
                norm: gval.abs(),
            });
        }
        let sign = if gval > 0.0 { 1.0 } else { -1.0 };
        let absn = gn.scale(sign).apply(crate::jet::Func::Sqrt).unwrap();
        legs.push(w.iter().map(|wi| wi.clone() / absn.clone()).collect());
        eps.push(sign);
        Ok(true)
    };

    for seed in seeds {
        if !push_leg(&mut legs, &mut eps, seed)? {
            return Err(Error::RankDeficient { point: point() });
        }
    }
    for a in 0..m {
        if legs.len() == m {
            break;
        }
        let cand: Vec<S> = (0..m)
            .map(|i| if i == a { one.clone() } else { zero.clone() })
            .collect();
        push_leg(&mut legs, &mut eps, cand)?;
    }
    if legs.len() < m {
        return Err(Error::RankDeficient { point: point() });
    }

    Ok(Frame { legs, eps, r })
}

/// The fundamental tensors and frame data at one total-space point.
///
/// `t[i][b]` holds `T_{e_i} e_b` and `a[al][b]` holds `A_{e_{r+al}} e_b` as
/// jet fields; `h` is the mean curvature `sum_i eps_i T_{e_i} e_i`.
#[derive(Debug)]
pub struct SubPoint {
    pub x: Vec<f64>,
    pub base_x: Vec<f64>,
    pub g: Mat<f64>,
    pub g_j: Mat<Jet2>,
    pub g_inv: Mat<f64>,
    pub gamma_j: Vec<Mat<Jet2>>,
    pub frame: Frame<f64>,
    pub frame_j: Frame<Jet2>,
    pub dmap_v: Mat<f64>,
    pub dmap_j: Mat<Jet2>,
    pub t: Vec<Vec<Vec<Jet2>>>,
    pub a: Vec<Vec<Vec<Jet2>>>,
    pub h: Vec<Jet2>,
    pub m: usize,
    pub n: usize,
    pub r: usize,
}

impl SubPoint {
    pub fn compute(ctx: &SubCtx, x: &[f64]) -> Result<SubPoint> {
        let (m, n, r) = (ctx.m, ctx.n, ctx.r);
        let jets = ctx.total.lift(x);

        let g_j = ctx.total.metric_at(&jets)?;
        let g: Mat<f64> = g_j.iter().map(|row| row.iter().map(|j| j.value).collect()).collect();
        let g_inv = linalg::inverse(&g, 1e-12).ok_or_else(|| Error::DegenerateMetric {
            point: x.to_vec(),
            det: linalg::det(&g),
        })?;
        let gamma_j = ctx.total.christoffel_at(&jets)?;
        let frame_j = build_frame(ctx, &jets)?;
        let frame = frame_j.values();

        let mut dmap_j: Mat<Jet2> = Vec::with_capacity(n);
        for k in 0..n {
            let mut row = Vec::with_capacity(m);
            for a in 0..m {
                row.push(ctx.dmap[k][a].eval(&jets)?);
            }
            dmap_j.push(row);
        }
        let dmap_v: Mat<f64> = dmap_j
            .iter()
            .map(|row| row.iter().map(|j| j.value).collect())
            .collect();

        let base_x = ctx.base_point(x)?;

        let mut sp = SubPoint {
            x: x.to_vec(),
            base_x,
            g,
            g_j,
            g_inv,
            gamma_j,
            frame,
            frame_j,
            dmap_v,
            dmap_j,
            t: Vec::new(),
            a: Vec::new(),
            h: Vec::new(),
            m,
            n,
            r,
        };

        // T over vertical first slots, A over horizontal first slots.
        let mut t = Vec::with_capacity(r);
        for i in 0..r {
            let ei = sp.frame_j.legs[i].clone();
            let mut row = Vec::with_capacity(m);
            for b in 0..m {
                let eb = &sp.frame_j.legs[b];
                let grad = sp.nabla_j(&ei, eb);
                let field = if b < r {
                    sp.hproj_j(&grad)
                } else {
                    sp.vproj_j(&grad)
                };
                row.push(field);
            }
            t.push(row);
        }
        let mut a = Vec::with_capacity(n);
        for al in 0..n {
            let ea = sp.frame_j.legs[r + al].clone();
            let mut row = Vec::with_capacity(m);
            for b in 0..m {
                let eb = &sp.frame_j.legs[b];
                let grad = sp.nabla_j(&ea, eb);
                let field = if b < r {
                    sp.hproj_j(&grad)
                } else {
                    sp.vproj_j(&grad)
                };
                row.push(field);
            }
            a.push(row);
        }
        let mut h = vec![Jet2::constant(m, 0.0); m];
        for i in 0..r {
            for c in 0..m {
                h[c] = h[c].clone() + t[i][i][c].scale(sp.frame.eps[i]);
            }
        }
        sp.t = t;
        sp.a = a;
        sp.h = h;
        Ok(sp)
    }

    pub fn eps(&self, a: usize) -> f64 {
        self.frame.eps[a]
    }

    pub fn leg(&self, a: usize) -> &[f64] {
        &self.frame.legs[a]
    }

    pub fn leg_j(&self, a: usize) -> &[Jet2] {
        &self.frame_j.legs[a]
    }

    pub fn gdot(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for a in 0..self.m {
            for b in 0..self.m {
                acc += self.g[a][b] * u[a] * v[b];
            }
        }
        acc
    }

    pub fn gdot_j(&self, u: &[Jet2], v: &[Jet2]) -> Jet2 {
        gdot(&self.g_j, u, v)
    }

    /// Euclidean-in-frame residual norm: sqrt(sum_a g(w, e_a)^2).
    pub fn frame_norm(&self, w: &[f64]) -> f64 {
        (0..self.m)
            .map(|a| self.gdot(w, self.leg(a)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn vproj(&self, w: &[f64]) -> Vec<f64> {
        self.proj_block(w, 0, self.r)
    }

    pub fn hproj(&self, w: &[f64]) -> Vec<f64> {
        self.proj_block(w, self.r, self.m)
    }

    fn proj_block(&self, w: &[f64], from: usize, to: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for a in from..to {
            let c = self.eps(a) * self.gdot(w, self.leg(a));
            for k in 0..self.m {
                out[k] += c * self.leg(a)[k];
            }
        }
        out
    }

    pub fn vproj_j(&self, w: &[Jet2]) -> Vec<Jet2> {
        self.proj_block_j(w, 0, self.r)
    }

    pub fn hproj_j(&self, w: &[Jet2]) -> Vec<Jet2> {
        self.proj_block_j(w, self.r, self.m)
    }

    fn proj_block_j(&self, w: &[Jet2], from: usize, to: usize) -> Vec<Jet2> {
        let mut out = vec![Jet2::constant(self.m, 0.0); self.m];
        for a in from..to {
            let c = self.gdot_j(w, self.leg_j(a)).scale(self.eps(a));
            for k in 0..self.m {
                out[k] = out[k].clone() + c.clone() * self.leg_j(a)[k].clone();
            }
        }
        out
    }

    /// Covariant derivative of a jet field along a plain direction (value level).
    pub fn nabla_dir(&self, dir: &[f64], field: &[Jet2]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        for c in 0..m {
            let mut acc = 0.0;
            for d in 0..m {
                if dir[d] == 0.0 {
                    continue;
                }
                let mut v = field[c].grad[d];
                for e in 0..m {
                    v += self.gamma_j[c][d][e].value * field[e].value;
                }
                acc += dir[d] * v;
            }
            out[c] = acc;
        }
        out
    }

    /// Covariant derivative of a jet field along a jet direction; the result
    /// is one derivative order shallower than the inputs.
    pub fn nabla_j(&self, dir: &[Jet2], field: &[Jet2]) -> Vec<Jet2> {
        let m = self.m;
        let mut out = Vec::with_capacity(m);
        for c in 0..m {
            let mut acc = Jet2::constant(m, 0.0);
            for d in 0..m {
                let mut v = field[c].d(d);
                for e in 0..m {
                    v = v + self.gamma_j[c][d][e].clone() * field[e].clone();
                }
                acc = acc + dir[d].clone() * v;
            }
            out.push(acc);
        }
        out
    }

    fn tensor_apply(&self, comps: &[Vec<Vec<Jet2>>], from: usize, e: &[f64], f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (s, row) in comps.iter().enumerate() {
            let slot = from + s;
            let ce = self.eps(slot) * self.gdot(e, self.leg(slot));
            if ce == 0.0 {
                continue;
            }
            for b in 0..self.m {
                let cf = self.eps(b) * self.gdot(f, self.leg(b));
                if cf == 0.0 {
                    continue;
                }
                for k in 0..self.m {
                    out[k] += ce * cf * row[b][k].value;
                }
            }
        }
        out
    }

    /// `T_E F` for arbitrary tangent vectors (tensorial slots).
    pub fn t_apply(&self, e: &[f64], f: &[f64]) -> Vec<f64> {
        self.tensor_apply(&self.t, 0, e, f)
    }

    /// `A_E F` for arbitrary tangent vectors.
    pub fn a_apply(&self, e: &[f64], f: &[f64]) -> Vec<f64> {
        self.tensor_apply(&self.a, self.r, e, f)
    }

    /// `A(E, F)` as a jet field, straight from the definition.
    pub fn a_field(&self, e: &[Jet2], f: &[Jet2]) -> Vec<Jet2> {
        let he = self.hproj_j(e);
        let vf = self.vproj_j(f);
        let hf = self.hproj_j(f);
        let p1 = self.hproj_j(&self.nabla_j(&he, &vf));
        let p2 = self.vproj_j(&self.nabla_j(&he, &hf));
        p1.into_iter()
            .zip(p2)
            .map(|(a, b)| a + b)
            .collect()
    }

    /// `T(E, F)` as a jet field.
    pub fn t_field(&self, e: &[Jet2], f: &[Jet2]) -> Vec<Jet2> {
        let ve = self.vproj_j(e);
        let vf = self.vproj_j(f);
        let hf = self.hproj_j(f);
        let p1 = self.hproj_j(&self.nabla_j(&ve, &vf));
        let p2 = self.vproj_j(&self.nabla_j(&ve, &hf));
        p1.into_iter()
            .zip(p2)
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn h_values(&self) -> Vec<f64> {
        self.h.iter().map(|j| j.value).collect()
    }

    /// Frame-route divergence: `sum_a eps_a g(nabla_{e_a} H, e_a)`.
    pub fn div_field(&self, field: &[Jet2]) -> f64 {
        (0..self.m)
            .map(|a| {
                let d = self.nabla_dir(self.leg(a), field);
                self.eps(a) * self.gdot(&d, self.leg(a))
            })
            .sum()
    }

    /// `g(A,A)` over horizontal pairs and over mixed pairs; the two are equal.
    pub fn norm_a2(&self) -> (f64, f64) {
        let mut hh = 0.0;
        let mut hv = 0.0;
        for al in 0..self.n {
            for b in 0..self.m {
                let v: Vec<f64> = self.a[al][b].iter().map(|j| j.value).collect();
                let term = self.eps(self.r + al) * self.eps(b) * self.gdot(&v, &v);
                if b < self.r {
                    hv += term;
                } else {
                    hh += term;
                }
            }
        }
        (hh, hv)
    }

    /// `g(T,T)` over vertical pairs and over mixed pairs.
    pub fn norm_t2(&self) -> (f64, f64) {
        let mut vv = 0.0;
        let mut vh = 0.0;
        for i in 0..self.r {
            for b in 0..self.m {
                let v: Vec<f64> = self.t[i][b].iter().map(|j| j.value).collect();
                let term = self.eps(i) * self.eps(b) * self.gdot(&v, &v);
                if b < self.r {
                    vv += term;
                } else {
                    vh += term;
                }
            }
        }
        (vv, vh)
    }

    /// `g(A_X, T_U) = sum_al eps_al g(A_X e_al, T_U e_al)`.
    pub fn cross_at(&self, x: &[f64], u: &[f64]) -> f64 {
        (self.r..self.m)
            .map(|al| {
                let ax = self.a_apply(x, self.leg(al));
                let tu = self.t_apply(u, self.leg(al));
                self.eps(al) * self.gdot(&ax, &tu)
            })
            .sum()
    }

    /// Max over vertical pairs of the frame norm of `T_{e_i} e_j - g(e_i,e_j) H / r`.
    pub fn umbilicity_residual(&self) -> f64 {
        let h = self.h_values();
        let mut worst: f64 = 0.0;
        for i in 0..self.r {
            for j in 0..self.r {
                let gij = if i == j { self.eps(i) } else { 0.0 };
                let mut w: Vec<f64> = (0..self.m).map(|c| self.t[i][j][c].value).collect();
                for c in 0..self.m {
                    w[c] -= gij * h[c] / self.r as f64;
                }
                worst = worst.max(self.frame_norm(&w));
            }
        }
        worst
    }

    /// `delta-tilde A (X) = -sum_al eps_al (nabla_{e_al} A)_{e_al} X` for a
    /// jet field `X` (value level).
    pub fn delta_a(&self, xf: &[Jet2]) -> Vec<f64> {
        let xv: Vec<f64> = xf.iter().map(|j| j.value).collect();
        let mut out = vec![0.0; self.m];
        for al in self.r..self.m {
            let ea_j = self.leg_j(al).to_vec();
            let ea = self.leg(al);
            let afield = self.a_field(&ea_j, xf);
            let term1 = self.nabla_dir(ea, &afield);
            let w = self.nabla_dir(ea, &ea_j);
            let term2 = self.a_apply(&w, &xv);
            let u = self.nabla_dir(ea, xf);
            let term3 = self.a_apply(ea, &u);
            for c in 0..self.m {
                out[c] -= self.eps(al) * (term1[c] - term2[c] - term3[c]);
            }
        }
        out
    }

    /// `delta-check T (U) = -sum_i eps_i (nabla_{e_i} T)_{e_i} U` for a jet
    /// field `U` (value level).
    pub fn delta_t(&self, uf: &[Jet2]) -> Vec<f64> {
        let uv: Vec<f64> = uf.iter().map(|j| j.value).collect();
        let mut out = vec![0.0; self.m];
        for i in 0..self.r {
            let ei_j = self.leg_j(i).to_vec();
            let ei = self.leg(i);
            let tfield = self.t_field(&ei_j, uf);
            let term1 = self.nabla_dir(ei, &tfield);
            let w = self.nabla_dir(ei, &ei_j);
            let term2 = self.t_apply(&w, &uv);
            let u = self.nabla_dir(ei, uf);
            let term3 = self.t_apply(ei, &u);
            for c in 0..self.m {
                out[c] -= self.eps(i) * (term1[c] - term2[c] - term3[c]);
            }
        }
        out
    }

    /// Extend a tangent vector by constant frame coefficients (a valid field
    /// extension for tensor-derivative formulas).
    pub fn const_frame_extension(&self, v: &[f64]) -> Vec<Jet2> {
        let mut out = vec![Jet2::constant(self.m, 0.0); self.m];
        for a in 0..self.m {
            let c = self.eps(a) * self.gdot(v, self.leg(a));
            for k in 0..self.m {
                out[k] = out[k].clone() + self.leg_j(a)[k].scale(c);
            }
        }
        out
    }

    /// Push a tangent vector to the base.
    pub fn push(&self, v: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.dmap_v, &v.to_vec())
    }

    pub fn push_j(&self, v: &[Jet2]) -> Vec<Jet2> {
        linalg::mat_vec(&self.dmap_j, &v.to_vec())
    }

    /// Base-coordinate gradient of a fibre-constant scalar, by least squares
    /// through the projection differential.
    pub fn pushdown_grad(&self, s: &Jet2) -> Result<Vec<f64>> {
        let gram = linalg::mat_mul(&self.dmap_v, &linalg::transpose(&self.dmap_v));
        let rhs: Vec<f64> = (0..self.n)
            .map(|k| (0..self.m).map(|a| self.dmap_v[k][a] * s.grad[a]).sum())
            .collect();
        linalg::solve(&gram, &rhs, 1e-12).ok_or_else(|| Error::RankDeficient {
            point: self.x.clone(),
        })
    }

    /// Horizontal lift of a base tangent vector (given by constant base
    /// components) as a jet field: `X = sum_al eps_al g'(X', dpi e_al) e_al`.
    pub fn basic_lift(&self, ctx: &SubCtx, base_components: &[f64]) -> Result<Vec<Jet2>> {
        let jets = ctx.total.lift(&self.x);
        let mut bp_j = Vec::with_capacity(self.n);
        for e in &ctx.spec.map {
            bp_j.push(e.eval(&jets)?);
        }
        let gb = ctx.base.metric_at(&bp_j)?;
        let mut out = vec![Jet2::constant(self.m, 0.0); self.m];
        for al in self.r..self.m {
            let pe = self.push_j(self.leg_j(al));
            let mut coeff = Jet2::constant(self.m, 0.0);
            for k in 0..self.n {
                for l in 0..self.n {
                    coeff = coeff + gb[k][l].scale(base_components[k]) * pe[l].clone();
                }
            }
            let coeff = coeff.scale(self.eps(al));
            for c in 0..self.m {
                out[c] = out[c].clone() + coeff.clone() * self.leg_j(al)[c].clone();
            }
        }
        Ok(out)
    }

    /// Frame orthonormality, vertical-kernel and axiom (c) residuals.
    pub fn frame_residuals(&self, base_g: &Mat<f64>) -> (f64, f64, f64) {
        let mut ortho: f64 = 0.0;
        for a in 0..self.m {
            for b in 0..self.m {
                let target = if a == b { self.eps(a) } else { 0.0 };
                ortho = ortho.max((self.gdot(self.leg(a), self.leg(b)) - target).abs());
            }
        }
        let mut vert: f64 = 0.0;
        for i in 0..self.r {
            let p = self.push(self.leg(i));
            vert = vert.max(p.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        let mut axc: f64 = 0.0;
        for a in self.r..self.m {
            for b in self.r..self.m {
                let pa = self.push(self.leg(a));
                let pb = self.push(self.leg(b));
                let mut dot = 0.0;
                for k in 0..self.n {
                    for l in 0..self.n {
                        dot += base_g[k][l] * pa[k] * pb[l];
                    }
                }
                let target = if a == b { self.eps(a) } else { 0.0 };
                axc = axc.max((dot - target).abs());
            }
        }
        (ortho, vert, axc)
    }
}

/// Validate the submersion axioms over a grid: full rank, frame construction,
/// orthonormality, and preservation of horizontal scalar products.
pub fn validate_submersion(ctx: &SubCtx, grid: &[Vec<f64>]) -> Result<()> {
    for p in grid {
        let sp = SubPoint::compute(ctx, p)?;
        let base_g = ctx.base.metric_at(&sp.base_x)?;
        let (ortho, vert, axc) = sp.frame_residuals(&base_g);
        if ortho > FRAME_TOL || vert > FRAME_TOL {
            return Err(Error::Invalid(format!(
                "adapted frame failed at {:?}: orthonormality {ortho:e}, kernel {vert:e}",
                p
            )));
        }
        if axc > AXIOM_C_TOL {
            return Err(Error::AxiomC {
                point: p.clone(),
                residual: axc,
            });
        }
    }
    Ok(())
}

/// Points on the fibre through `p`: coordinate walks for aligned charts,
/// integration of the vertical frame flow otherwise. Base images are checked
/// to agree to 1e-10.
pub fn fibre_points(ctx: &SubCtx, p: &[f64], count: usize) -> Result<Vec<Vec<f64>>> {
    let mut pts = Vec::with_capacity(count);
    if ctx.spec.coordinate_aligned {
        for j in 0..count {
            let frac = j as f64 / count as f64;
            let mut q = p.to_vec();
            for c in ctx.n..ctx.m {
                let (lo, hi) = ctx.spec.total.domain[c];
                match ctx.spec.total.periodic[c] {
                    Some(t) => {
                        q[c] = lo + (q[c] - lo + frac * t).rem_euclid(t);
                    }
                    None => {
                        let margin = (hi - lo) * INTERIOR_MARGIN;
                        let (a, b) = (lo + margin, hi - margin);
                        // slide within the margin box, folding at the ends
                        let span = b - a;
                        let off = (q[c] - a + frac * span).rem_euclid(2.0 * span);
                        q[c] = a + if off > span { 2.0 * span - off } else { off };
                    }
                }
            }
            pts.push(q);
        }
    } else {
        // follow the vertical frame legs; exact for fibres generated by the flow
        let step = 1.2 / count as f64;
        let mut x = p.to_vec();
        pts.push(x.clone());
        let vert_leg = |x: &[f64], leg: usize| -> Result<Vec<f64>> {
            let jets = ctx.total.lift(x);
            let fr = build_frame(ctx, &jets)?;
            Ok(fr.legs[leg].iter().map(|j| j.value).collect())
        };
        let mut leg = 0;
        while pts.len() < count {
            // one classical fourth-order step along the vertical leg field
            let k1 = vert_leg(&x, leg)?;
            let xk = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> {
                x.iter().zip(k).map(|(a, b)| a + s * b).collect()
            };
            let k2 = vert_leg(&xk(&x, &k1, 0.5 * step), leg)?;
            let k3 = vert_leg(&xk(&x, &k2, 0.5 * step), leg)?;
            let k4 = vert_leg(&xk(&x, &k3, step), leg)?;
            for c in 0..ctx.m {
                x[c] += step / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
            pts.push(x.clone());
            leg = (leg + 1) % ctx.r;
        }
    }

    let b0 = ctx.base_point(p)?;
    let mut worst: f64 = 0.0;
    for q in &pts {
        let bq = ctx.base_point(q)?;
        worst = worst.max(crate::manifold::chart_distance(&ctx.base, &b0, &bq));
    }
    if worst > 1e-10 {
        return Err(Error::NotOneFibre { deviation: worst });
    }
    Ok(pts)
}

/// Max spread of a scalar over fibre sample points.
pub fn fibre_constancy<F>(points: &[&SubPoint], f: F) -> Result<f64>
where
    F: Fn(&SubPoint) -> Result<f64>,
{
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for sp in points {
        let v = f(sp)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi - lo)
}

/// Basic-ness residual of a horizontal field given by a per-point evaluator:
/// max spread of `g(X, Z)` over the fibre points, over all canonical basic
/// test fields `Z` (lifts of base coordinate vectors).
pub fn basicness_residual<F>(ctx: &SubCtx, points: &[&SubPoint], field: F) -> Result<f64>
where
    F: Fn(&SubPoint) -> Result<Vec<f64>>,
{
    let mut worst: f64 = 0.0;
    for k in 0..ctx.n {
        let mut basis = vec![0.0; ctx.n];
        basis[k] = 1.0;
        let spread = fibre_constancy(points, |sp| {
            let x = field(sp)?;
            let z = sp.basic_lift(ctx, &basis)?;
            let zv: Vec<f64> = z.iter().map(|j| j.value).collect();
            Ok(sp.gdot(&x, &zv))
        })?;
        worst = worst.max(spread);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::parse_specs;

    pub(crate) const FLAT: &str = "
manifold t2 { dim 2 signature 1 coords th ph
  periodic th 6.283185307179586 periodic ph 6.283185307179586
  metric { g[0][0] = 1  g[1][1] = -1 } }
manifold s1 { dim 1 signature 0 coords th periodic th 6.283185307179586
  metric { g[0][0] = 1 } }
submersion flat { total t2; base s1; map { th = th } aligned true }
";

    pub(crate) const WARPED_T2: &str = "
manifold wt2 { dim 2 signature 1 coords th ph
  periodic th 6.283185307179586 periodic ph 6.283185307179586
  metric { g[0][0] = 1  g[1][1] = -(2 + cos(th))^2 } }
manifold s1 { dim 1 signature 0 coords th periodic th 6.283185307179586
  metric { g[0][0] = 1 } }
submersion warped { total wt2; base s1; map { th = th } aligned true }
";

    pub(crate) const HOPF: &str = "
manifold s3 { dim 3 signature 0 coords eta xi1 xi2
  domain eta in [0, 1.5707963267948966]
  periodic xi1 6.283185307179586 periodic xi2 6.283185307179586
  metric { g[0][0] = 1  g[1][1] = cos(eta)^2  g[2][2] = sin(eta)^2 } }
manifold s2 { dim 2 signature 0 coords th ph
  domain th in [0, 3.141592653589793] periodic ph 6.283185307179586
  metric { g[0][0] = 1/4  g[1][1] = sin(th)^2/4 } }
submersion hopf { total s3; base s2; map { th = 2*eta  ph = xi2 - xi1 } aligned false }
";

    fn ctx_of(src: &str) -> SubCtx {
        SubCtx::new(parse_specs(src).unwrap().submersions[0].clone())
    }

    #[test]
    fn flat_torus_frame_is_coordinate_frame() {
        let ctx = ctx_of(FLAT);
        let sp = SubPoint::compute(&ctx, &[0.7, 1.3]).unwrap();
        // vertical leg = d_ph with eps -1, horizontal = d_th with eps +1
        assert_eq!(sp.r, 1);
        assert!((sp.leg(0)[1].abs() - 1.0).abs() < 1e-12);
        assert_eq!(sp.eps(0), -1.0);
        assert!((sp.leg(1)[0].abs() - 1.0).abs() < 1e-12);
        assert_eq!(sp.eps(1), 1.0);
        // totally geodesic: T = 0, H = 0
        assert!(sp.umbilicity_residual() < 1e-14);
        assert!(sp.h_values().iter().all(|v| v.abs() < 1e-14));
        let (aa, ab) = sp.norm_a2();
        assert!(aa.abs() < 1e-14 && ab.abs() < 1e-14);
    }

    #[test]
    fn warped_torus_vertical_leg_and_mean_curvature() {
        let ctx = ctx_of(WARPED_T2);
        let th = 0.9_f64;
        let sp = SubPoint::compute(&ctx, &[th, 2.0]).unwrap();
        let f = 2.0 + th.cos();
        // vertical leg d_ph / f with eps = -1
        assert!((sp.leg(0)[1].abs() - 1.0 / f).abs() < 1e-12);
        assert_eq!(sp.eps(0), -1.0);
        // H = -(f'/f) d_th (r = 1); f' = -sin th
        let h = sp.h_values();
        assert!((h[0] - th.sin() / f).abs() < 1e-10, "H = {h:?}");
        assert!(h[1].abs() < 1e-12);
        // umbilic automatically for r = 1; g(T,T) = g(H,H)/r, both routes agree
        assert!(sp.umbilicity_residual() < 1e-12);
        let (tt, tv) = sp.norm_t2();
        let ghh = sp.gdot(&h, &h);
        assert!((tt - ghh).abs() < 1e-10, "g(T,T) = {tt} vs g(H,H) = {ghh}");
        assert!((tt - tv).abs() < 1e-10, "the two g(T,T) routes differ");
    }

    #[test]
    fn frame_and_axioms_hold_on_hopf_chart() {
        let ctx = ctx_of(HOPF);
        let grid = crate::grid::standard_grid(&ctx.spec.total);
        validate_submersion(&ctx, &grid[..16.min(grid.len())]).unwrap();
        // T = 0 and g(A,A) = 2 (the two computation routes agree)
        let sp = SubPoint::compute(&ctx, &[0.6, 1.0, 2.0]).unwrap();
        let (tt, tv) = sp.norm_t2();
        assert!(tt.abs() < 1e-9 && tv.abs() < 1e-9);
        let (aa, ab) = sp.norm_a2();
        assert!((aa - 2.0).abs() < 1e-8, "g(A,A) horizontal route = {aa}");
        assert!((aa - ab).abs() < 1e-8, "the two g(A,A) routes differ");
        // A_X Y has unit norm for unit basic X, Y
        let ax = sp.a_apply(sp.leg(1), sp.leg(2));
        assert!((sp.gdot(&ax, &ax).abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn a_is_alternating_and_t_symmetric() {
        let ctx = ctx_of(HOPF);
        let sp = SubPoint::compute(&ctx, &[0.8, 0.4, 1.1]).unwrap();
        let x = sp.leg(1).to_vec();
        let y = sp.leg(2).to_vec();
        let axy = sp.a_apply(&x, &y);
        let ayx = sp.a_apply(&y, &x);
        for c in 0..3 {
            assert!((axy[c] + ayx[c]).abs() < 1e-8);
        }
        // first slot only sees the horizontal part
        let mixed: Vec<f64> = (0..3).map(|c| x[c] + sp.leg(0)[c]).collect();
        let amixed = sp.a_apply(&mixed, &y);
        for c in 0..3 {
            assert!((amixed[c] - axy[c]).abs() < 1e-8);
        }
    }

    #[test]
    fn lemma_basic_lift_is_pi_related() {
        let ctx = ctx_of(HOPF);
        let sp = SubPoint::compute(&ctx, &[0.7, 0.9, 2.4]).unwrap();
        for k in 0..2 {
            let mut b = vec![0.0; 2];
            b[k] = 1.0;
            let lift = sp.basic_lift(&ctx, &b).unwrap();
            let lv: Vec<f64> = lift.iter().map(|j| j.value).collect();
            let pushed = sp.push(&lv);
            for l in 0..2 {
                let expect = if l == k { 1.0 } else { 0.0 };
                assert!(
                    (pushed[l] - expect).abs() < 1e-9,
                    "push of lift {k} = {pushed:?}"
                );
            }
        }
    }

    #[test]
    fn h_nabla_v_x_equals_a_x_v() {
        // Lemma: h nabla_V X = A_X V for basic X, vertical V.
        for src in [WARPED_T2, HOPF] {
            let ctx = ctx_of(src);
            let p = if ctx.m == 2 {
                vec![0.8, 1.7]
            } else {
                vec![0.7, 1.2, 0.4]
            };
            let sp = SubPoint::compute(&ctx, &p).unwrap();
            let mut b = vec![0.0; ctx.n];
            b[0] = 1.0;
            let x = sp.basic_lift(&ctx, &b).unwrap();
            let xv: Vec<f64> = x.iter().map(|j| j.value).collect();
            let v = sp.leg(0).to_vec();
            let lhs = sp.hproj(&sp.nabla_dir(&v, &x));
            let rhs = sp.a_apply(&xv, &v);
            for c in 0..ctx.m {
                assert!((lhs[c] - rhs[c]).abs() < 1e-7, "{src:.20} leg {c}");
            }
        }
    }

    #[test]
    fn basic_lift_nabla_projects_to_base_connection() {
        // Lemma: dpi(h nabla_X Y) = nabla'_{X'} Y' for basic lifts of base
        // coordinate fields.
        let ctx = ctx_of(HOPF);
        let p = vec![0.65, 0.8, 1.9];
        let sp = SubPoint::compute(&ctx, &p).unwrap();
        let gamma_b = ctx.base.christoffel_at(&sp.base_x).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                let mut bj = vec![0.0; 2];
                bj[j] = 1.0;
                let mut bk = vec![0.0; 2];
                bk[k] = 1.0;
                let xj = sp.basic_lift(&ctx, &bj).unwrap();
                let yk = sp.basic_lift(&ctx, &bk).unwrap();
                let xv: Vec<f64> = xj.iter().map(|q| q.value).collect();
                let hnab = sp.hproj(&sp.nabla_dir(&xv, &yk));
                let pushed = sp.push(&hnab);
                for l in 0..2 {
                    let expect = gamma_b[l][j][k];
                    assert!(
                        (pushed[l] - expect).abs() < 1e-7,
                        "nabla'_{j}{k} component {l}: {} vs {expect}",
                        pushed[l]
                    );
                }
            }
        }
    }

    #[test]
    fn fibre_points_share_base_image() {
        for src in [WARPED_T2, HOPF] {
            let ctx = ctx_of(src);
            let p = if ctx.m == 2 {
                vec![1.1, 0.3]
            } else {
                vec![0.8, 0.5, 1.0]
            };
            let pts = fibre_points(&ctx, &p, 8).unwrap();
            assert_eq!(pts.len(), 8);
        }
    }

    #[test]
    fn h_is_basic_on_warped_but_coordinate_mix_is_not() {
        let ctx = ctx_of(WARPED_T2);
        let pts = fibre_points(&ctx, &[0.9, 0.2], 8).unwrap();
        let owned: Vec<SubPoint> = pts
            .iter()
            .map(|q| SubPoint::compute(&ctx, q).unwrap())
            .collect();
        let sps: Vec<&SubPoint> = owned.iter().collect();
        let res_h = basicness_residual(&ctx, &sps, |sp| Ok(sp.h_values())).unwrap();
        assert!(res_h < 1e-10, "H basic on a warped product: {res_h:e}");
        // X = ph * d_th depends on the fibre coordinate: not basic
        let res_bad = basicness_residual(&ctx, &sps, |sp| {
            let mut v = vec![0.0; 2];
            v[0] = sp.x[1];
            Ok(v)
        })
        .unwrap();
        assert!(res_bad > 1e-3, "negative control: {res_bad:e}");
    }

    #[test]
    fn lightlike_fibre_direction_is_rejected() {
        // fibre direction th+ph is lightlike for g = dth^2 - dph^2 ... build a
        // submersion whose kernel is lightlike: map = th + ph on the flat
        // Lorentz torus; ker dpi = span(d_th - d_ph), and g(d_th - d_ph, ...) = 0.
        let src = "
manifold t2 { dim 2 signature 1 coords th ph
  periodic th 6.283185307179586 periodic ph 6.283185307179586
  metric { g[0][0] = 1  g[1][1] = -1 } }
manifold s1 { dim 1 signature 0 coords u periodic u 6.283185307179586
  metric { g[0][0] = 1 } }
submersion bad { total t2; base s1; map { u = th + ph } }
";
        let ctx = ctx_of(src);
        let err = SubPoint::compute(&ctx, &[0.3, 0.4]).unwrap_err();
        assert!(matches!(err, Error::DegenerateVerticalMetric { .. }));
    }
}
