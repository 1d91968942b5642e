//! Geodesic integration and the Clairaut girth diagnostics.
//!
//! The integrator is a fixed-step classical fourth-order scheme on
//! `x'' + Gamma(x) x' x' = 0`, with an optional step-doubling error estimate
//! that rejects (halts) rather than adapts, keeping runs reproducible.

use crate::dsl::ast::Expr;
use crate::error::{Error, Result};
use crate::grid::standard_grid;
use crate::jet::{Jet2, Scalar};
use crate::manifold::Chart;
use crate::submersion::{build_frame, fibre_points, SubCtx, SubPoint};

#[derive(Clone, Debug)]
pub struct GeodesicState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

#[derive(Clone, Debug)]
pub struct ChartExitInfo {
    pub step: usize,
    pub coord: String,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<GeodesicState>,
    /// `g(v,v)` at the start; constant along exact geodesics.
    pub energy0: f64,
    /// Max `|g(v,v)(t) - g(v,v)(0)|` over the run.
    pub energy_drift: f64,
    /// Set when the trajectory left a bounded coordinate range (partial result).
    pub exited: Option<ChartExitInfo>,
}

#[derive(Clone, Copy, Debug)]
pub struct IntegrateOpts {
    /// Compare each step against two half steps and reject on local error
    /// above `error_bound * (1 + |state|)`.
    pub check_local_error: bool,
    pub error_bound: f64,
}

impl Default for IntegrateOpts {
    fn default() -> Self {
        IntegrateOpts {
            check_local_error: false,
            error_bound: 1e-3,
        }
    }
}

fn accel(chart: &Chart, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let gamma = chart.christoffel_at(x)?;
    let m = chart.dim;
    let mut a = vec![0.0; m];
    for c in 0..m {
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                acc += gamma[c][i][j] * v[i] * v[j];
            }
        }
        a[c] = -acc;
    }
    Ok(a)
}

fn rk4_step(chart: &Chart, x: &[f64], v: &[f64], dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = chart.dim;
    let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(p, q)| p + s * q).collect()
    };
    let k1x = v.to_vec();
    let k1v = accel(chart, x, v)?;
    let k2x = add(v, &k1v, 0.5 * dt);
    let k2v = accel(chart, &add(x, &k1x, 0.5 * dt), &add(v, &k1v, 0.5 * dt))?;
    let k3x = add(v, &k2v, 0.5 * dt);
    let k3v = accel(chart, &add(x, &k2x, 0.5 * dt), &add(v, &k2v, 0.5 * dt))?;
    let k4x = add(v, &k3v, dt);
    let k4v = accel(chart, &add(x, &k3x, dt), &add(v, &k3v, dt))?;
    let mut nx = vec![0.0; m];
    let mut nv = vec![0.0; m];
    for c in 0..m {
        nx[c] = x[c] + dt / 6.0 * (k1x[c] + 2.0 * k2x[c] + 2.0 * k3x[c] + k4x[c]);
        nv[c] = v[c] + dt / 6.0 * (k1v[c] + 2.0 * k2v[c] + 2.0 * k3v[c] + k4v[c]);
    }
    Ok((nx, nv))
}

fn energy(chart: &Chart, x: &[f64], v: &[f64]) -> Result<f64> {
    let g = chart.metric_at(x)?;
    let m = chart.dim;
    let mut acc = 0.0;
    for a in 0..m {
        for b in 0..m {
            acc += g[a][b] * v[a] * v[b];
        }
    }
    Ok(acc)
}

/// Integrate the geodesic through `(x0, v0)` for `steps` steps of size `dt`.
/// Periodic coordinates wrap implicitly (expressions reduce them); bounded
/// coordinates leaving their domain halt the run with a partial result.
pub fn integrate_geodesic(
    chart: &Chart,
    coords: &[String],
    x0: &[f64],
    v0: &[f64],
    dt: f64,
    steps: usize,
    opts: IntegrateOpts,
) -> Result<Trajectory> {
    assert!(dt > 0.0, "dt must be positive");
    let e0 = energy(chart, x0, v0)?;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(GeodesicState {
        x: x0.to_vec(),
        v: v0.to_vec(),
        t: 0.0,
    });
    let mut drift: f64 = 0.0;
    let mut exited = None;
    let mut x = x0.to_vec();
    let mut v = v0.to_vec();
    'run: for step in 0..steps {
        let (nx, nv) = rk4_step(chart, &x, &v, dt)?;
        if opts.check_local_error {
            let (hx, hv) = rk4_step(chart, &x, &v, 0.5 * dt)?;
            let (hx2, hv2) = rk4_step(chart, &hx, &hv, 0.5 * dt)?;
            let mut est: f64 = 0.0;
            let mut scale: f64 = 1.0;
            for c in 0..chart.dim {
                est = est.max((nx[c] - hx2[c]).abs()).max((nv[c] - hv2[c]).abs());
                scale = scale.max(nx[c].abs()).max(nv[c].abs());
            }
            if est > opts.error_bound * scale {
                return Err(Error::StepRejected {
                    step,
                    estimate: est,
                    bound: opts.error_bound * scale,
                });
            }
        }
        for c in 0..chart.dim {
            if chart.periodic[c].is_none() {
                let (lo, hi) = chart.domain[c];
                if nx[c] < lo || nx[c] > hi {
                    exited = Some(ChartExitInfo {
                        step,
                        coord: coords[c].clone(),
                        value: nx[c],
                    });
                    break 'run;
                }
            }
        }
        x = nx;
        v = nv;
        let e = energy(chart, &x, &v)?;
        drift = drift.max((e - e0).abs());
        states.push(GeodesicState {
            x: x.clone(),
            v: v.clone(),
            t: (step + 1) as f64 * dt,
        });
    }
    Ok(Trajectory {
        states,
        energy0: e0,
        energy_drift: drift,
        exited,
    })
}

/// One Clairaut observation along a trajectory.
#[derive(Clone, Debug)]
pub struct ClairautSample {
    pub t: f64,
    pub cosh_phi: f64,
    pub w: f64,
    pub product: f64,
}

/// Hyperbolic angle between a timelike velocity and its vertical part:
/// `cosh phi = -g(E,V) / (|E| |V|)` with `|E|^2 = -g(E,E)`.
pub fn hyperbolic_angle(ctx: &SubCtx, state: &GeodesicState) -> Result<(f64, Vec<f64>)> {
    let g = ctx.total.metric_at(&state.x)?;
    let m = ctx.m;
    let gdot = |u: &[f64], v: &[f64]| {
        let mut acc = 0.0;
        for a in 0..m {
            for b in 0..m {
                acc += g[a][b] * u[a] * v[b];
            }
        }
        acc
    };
    let gee = gdot(&state.v, &state.v);
    if gee >= 0.0 {
        return Err(Error::NonTimelike {
            which: "velocity".into(),
            norm2: gee,
            t: state.t,
        });
    }
    let frame = build_frame(ctx, &state.x)?;
    let mut vpart = vec![0.0; m];
    for i in 0..ctx.r {
        let c = frame.eps[i] * gdot(&state.v, &frame.legs[i]);
        for k in 0..m {
            vpart[k] += c * frame.legs[i][k];
        }
    }
    let gvv = gdot(&vpart, &vpart);
    if gvv >= 0.0 {
        return Err(Error::NonTimelike {
            which: "vertical part".into(),
            norm2: gvv,
            t: state.t,
        });
    }
    let cosh_phi = -gdot(&state.v, &vpart) / ((-gee).sqrt() * (-gvv).sqrt());
    Ok((cosh_phi, vpart))
}

#[derive(Clone, Debug)]
pub struct ClairautRun {
    pub trajectory: Trajectory,
    pub samples: Vec<ClairautSample>,
    /// Steps where velocity or vertical part was not timelike (skipped, counted).
    pub skipped_samples: usize,
    /// Max `|w cosh phi - (w cosh phi)(0)|` over valid samples.
    pub drift: f64,
    /// Grid residual of `H/r + grad f` (the girth hypothesis).
    pub girth_residual: f64,
    /// Fibre-constancy residual of `f` (`f = f_* o pi`).
    pub fibre_residual: f64,
}

/// Girth-law run: verify the gradient hypothesis `H/r = -grad f`, then
/// integrate and measure the drift of `w cosh phi` with `w = exp f`.
pub fn clairaut_drift(
    ctx: &SubCtx,
    girth_log: &Expr,
    x0: &[f64],
    v0: &[f64],
    dt: f64,
    steps: usize,
) -> Result<ClairautRun> {
    // gate 1: H/r = -grad f over the standard grid
    let grid = standard_grid(&ctx.spec.total);
    let mut girth_residual: f64 = 0.0;
    for p in grid.iter() {
        let sp = SubPoint::compute(ctx, p)?;
        let jets = ctx.total.lift(p);
        let fj: Jet2 = girth_log.eval(&jets)?;
        let mut grad = vec![0.0; ctx.m];
        for a in 0..ctx.m {
            for b in 0..ctx.m {
                grad[a] += sp.g_inv[a][b] * fj.grad[b];
            }
        }
        let h = sp.h_values();
        let rf = ctx.r as f64;
        let diff: Vec<f64> = (0..ctx.m).map(|c| h[c] / rf + grad[c]).collect();
        girth_residual = girth_residual.max(sp.frame_norm(&diff));
    }
    if girth_residual > 1e-6 {
        return Err(Error::Invalid(format!(
            "not a Clairaut submersion for this girth: |H/r + grad f| = {girth_residual:.3e}"
        )));
    }

    // gate 2: f constant along fibres
    let mut fibre_residual: f64 = 0.0;
    for anchor in [0, grid.len() / 2] {
        let pts = fibre_points(ctx, &grid[anchor], 8)?;
        let vals: Vec<f64> = pts
            .iter()
            .map(|q| Ok(girth_log.eval(&ctx.total.reduce_point(q))?))
            .collect::<Result<Vec<f64>>>()?;
        let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - vals.iter().cloned().fold(f64::INFINITY, f64::min);
        fibre_residual = fibre_residual.max(spread);
    }
    if fibre_residual > 1e-8 {
        return Err(Error::Invalid(format!(
            "girth log is not a pullback from the base: fibre spread {fibre_residual:.3e}"
        )));
    }

    let trajectory = integrate_geodesic(
        &ctx.total,
        &ctx.spec.total.coords,
        x0,
        v0,
        dt,
        steps,
        IntegrateOpts::default(),
    )?;

    let mut samples = Vec::new();
    let mut skipped = 0usize;
    for st in &trajectory.states {
        match hyperbolic_angle(ctx, st) {
            Ok((cosh_phi, _)) => {
                let f = girth_log.eval(&ctx.total.reduce_point(&st.x))?;
                let w = f.exp();
                samples.push(ClairautSample {
                    t: st.t,
                    cosh_phi,
                    w,
                    product: w * cosh_phi,
                });
            }
            Err(Error::NonTimelike { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let drift = match samples.first() {
        None => 0.0,
        Some(first) => samples
            .iter()
            .map(|s| (s.product - first.product).abs())
            .fold(0.0_f64, f64::max),
    };
    Ok(ClairautRun {
        trajectory,
        samples,
        skipped_samples: skipped,
        drift,
        girth_residual,
        fibre_residual,
    })
}

#[derive(Clone, Debug)]
pub struct MixedOdeRun {
    pub residual: f64,
    pub a_residual: f64,
    pub mixed_residual: f64,
    pub skipped: Option<String>,
}

/// Residual of `dh/dt = h^2` with `h = g(H/r, v)` along a horizontal
/// geodesic, valid when `A = 0` and the mixed curvature vanishes along the
/// trajectory (both gated).
pub fn mixed_ode_residual(
    ctx: &SubCtx,
    x0: &[f64],
    v0: &[f64],
    dt: f64,
    steps: usize,
) -> Result<MixedOdeRun> {
    // project the launch velocity horizontally
    let sp0 = SubPoint::compute(ctx, x0)?;
    let v0h = sp0.hproj(v0);

    let traj = integrate_geodesic(
        &ctx.total,
        &ctx.spec.total.coords,
        x0,
        &v0h,
        dt,
        steps,
        IntegrateOpts::default(),
    )?;

    let stride = (traj.states.len() / 16).max(1);
    let rf = ctx.r as f64;
    let mut a_res: f64 = 0.0;
    let mut mixed_res: f64 = 0.0;
    let mut ode_res: f64 = 0.0;
    for st in traj.states.iter().step_by(stride) {
        let sp = SubPoint::compute(ctx, &st.x)?;
        a_res = a_res.max(sp.norm_a2().0.abs()).max(sp.norm_a2().1.abs());
        let curv = crate::geometry::CurvatureAtPoint::compute(&ctx.total, &st.x)?;
        for i in 0..ctx.r {
            for al in ctx.r..ctx.m {
                mixed_res = mixed_res
                    .max(curv.riemann(sp.leg(al), sp.leg(i), sp.leg(al), sp.leg(i)).abs());
            }
        }
        // h and dh/dt from jet data: psi_b = g_{ab} H^a / r
        let mut psi = Vec::with_capacity(ctx.m);
        for b in 0..ctx.m {
            let mut acc = Jet2::constant(ctx.m, 0.0);
            for a in 0..ctx.m {
                acc = acc + sp.g_j[a][b].clone() * sp.h[a].scale(1.0 / rf);
            }
            psi.push(acc);
        }
        let h: f64 = (0..ctx.m).map(|b| psi[b].value * st.v[b]).sum();
        let accel_v = accel(&ctx.total, &st.x, &st.v)?;
        let mut dh = 0.0;
        for b in 0..ctx.m {
            dh += psi[b].dir_deriv(&st.v) * st.v[b] + psi[b].value * accel_v[b];
        }
        ode_res = ode_res.max((dh - h * h).abs() / (1.0 + dh.abs() + (h * h).abs()));
    }
    let gate = 1e-8;
    if a_res > gate {
        return Ok(MixedOdeRun {
            residual: 0.0,
            a_residual: a_res,
            mixed_residual: mixed_res,
            skipped: Some(format!("A does not vanish: g(A,A) residual {a_res:.3e}")),
        });
    }
    if mixed_res > 1e-6 {
        return Ok(MixedOdeRun {
            residual: 0.0,
            a_residual: a_res,
            mixed_residual: mixed_res,
            skipped: Some(format!(
                "mixed curvature does not vanish along the run ({mixed_res:.3e})"
            )),
        });
    }
    Ok(MixedOdeRun {
        residual: ode_res,
        a_residual: a_res,
        mixed_residual: mixed_res,
        skipped: None,
    })
}

/// Trajectory dump: one CSV record per step with `t`, position, velocity,
/// `g(v,v)` and, when a girth is supplied, `cosh_phi` and `w cosh_phi`.
pub fn trajectory_csv(
    ctx: &SubCtx,
    traj: &Trajectory,
    girth_log: Option<&Expr>,
) -> Result<String> {
    let coords = &ctx.spec.total.coords;
    let mut out = String::from("t");
    for c in coords {
        out.push_str(&format!(",{c}"));
    }
    for c in coords {
        out.push_str(&format!(",v_{c}"));
    }
    out.push_str(",g_vv");
    if girth_log.is_some() {
        out.push_str(",cosh_phi,w_cosh_phi");
    }
    out.push('\n');
    for st in &traj.states {
        out.push_str(&crate::report::fmt_float(st.t));
        for v in st.x.iter().chain(st.v.iter()) {
            out.push(',');
            out.push_str(&crate::report::fmt_float(*v));
        }
        out.push(',');
        out.push_str(&crate::report::fmt_float(energy(&ctx.total, &st.x, &st.v)?));
        if let Some(f) = girth_log {
            match hyperbolic_angle(ctx, st) {
                Ok((cosh_phi, _)) => {
                    let w = f.eval(&ctx.total.reduce_point(&st.x))?.exp();
                    out.push_str(&format!(
                        ",{},{}",
                        crate::report::fmt_float(cosh_phi),
                        crate::report::fmt_float(w * cosh_phi)
                    ));
                }
                Err(Error::NonTimelike { .. }) => out.push_str(",,"),
                Err(e) => return Err(e),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::manifold::parse_specs;

    #[test]
    fn flat_torus_geodesics_are_straight() {
        let case = catalog::load("lorentz-flat-torus").unwrap();
        let traj = integrate_geodesic(
            &case.ctx.total,
            &case.ctx.spec.total.coords,
            &[0.1, 0.2],
            &[0.3, 0.7],
            1e-2,
            500,
            IntegrateOpts {
                check_local_error: true,
                error_bound: 1e-3,
            },
        )
        .unwrap();
        assert!(traj.exited.is_none());
        assert!(traj.energy_drift < 1e-14);
        let last = traj.states.last().unwrap();
        assert!((last.x[0] - (0.1 + 0.3 * 5.0)).abs() < 1e-12);
        assert!((last.x[1] - (0.2 + 0.7 * 5.0)).abs() < 1e-12);
    }

    #[test]
    fn sphere_great_circle_returns_after_two_pi() {
        let src = "manifold s2 { dim 2 signature 0 coords eta phi
            domain eta in [0, 3.141592653589793] periodic phi 6.283185307179586
            metric { g[0][0] = 1  g[1][1] = sin(eta)^2 } }";
        let spec = &parse_specs(src).unwrap().manifolds[0];
        let chart = spec.chart();
        // unit-speed launch mixing both directions at eta = pi/4; dt ~ 1e-3
        // chosen so the run lands exactly on parameter 2*pi
        let eta0 = std::f64::consts::FRAC_PI_4;
        let v_eta = 0.6_f64;
        let v_phi = (1.0 - v_eta * v_eta).sqrt() / eta0.sin();
        let steps = 6283usize;
        let dt = std::f64::consts::TAU / steps as f64;
        let traj = integrate_geodesic(
            &chart,
            &spec.coords,
            &[eta0, 0.0],
            &[v_eta, v_phi],
            dt,
            steps,
            IntegrateOpts::default(),
        )
        .unwrap();
        assert!(traj.exited.is_none());
        assert!(traj.energy_drift < 1e-9, "drift {:.3e}", traj.energy_drift);
        // compare embedded positions at parameter 2*pi
        let embed = |x: &[f64]| {
            [
                x[0].sin() * x[1].cos(),
                x[0].sin() * x[1].sin(),
                x[0].cos(),
            ]
        };
        let s0 = embed(&traj.states[0].x);
        let s1 = embed(&traj.states[steps].x);
        let d: f64 = s0
            .iter()
            .zip(&s1)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(d < 1e-6, "great circle closes up: |gap| = {d:.3e}");
    }

    #[test]
    fn vertical_launch_on_cosh_model_stays_in_fibre() {
        let case = catalog::load("clairaut-cosh").unwrap();
        // at t = 0 the warp has a critical point; the fibre is totally geodesic
        let traj = integrate_geodesic(
            &case.ctx.total,
            &case.ctx.spec.total.coords,
            &[0.0, 0.5, 1.0],
            &[0.0, 0.4, 0.3],
            1e-3,
            2000,
            IntegrateOpts::default(),
        )
        .unwrap();
        for st in traj.states.iter().step_by(200) {
            assert!(st.x[0].abs() < 1e-12, "t stays 0, got {}", st.x[0]);
        }
        // purely vertical timelike: cosh phi = 1 exactly
        let (cosh_phi, _) = hyperbolic_angle(&case.ctx, &traj.states[500]).unwrap();
        assert!((cosh_phi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn horizontal_only_velocity_is_outside_the_angle_domain() {
        let case = catalog::load("clairaut-cosh").unwrap();
        let st = GeodesicState {
            x: vec![0.3, 0.0, 0.0],
            v: vec![1.0, 0.0, 0.0],
            t: 0.0,
        };
        // velocity is spacelike here (horizontal positive-definite)
        assert!(matches!(
            hyperbolic_angle(&case.ctx, &st),
            Err(Error::NonTimelike { .. })
        ));
    }

    #[test]
    fn clairaut_product_is_conserved_on_cosh_model() {
        let case = catalog::load("clairaut-cosh").unwrap();
        let girth = case.girth_log().unwrap().unwrap();
        let run = clairaut_drift(
            &case.ctx,
            &girth,
            &[0.2, 0.0, 0.0],
            &[0.2, 0.9, 0.3],
            1e-3,
            10_000,
        )
        .unwrap();
        assert_eq!(run.trajectory.states.len(), 10_001, "no chart exit");
        assert!(run.drift <= 1e-5, "drift {:.3e}", run.drift);
        assert!(run.girth_residual < 1e-9);
        // every sample on this run is timelike
        assert_eq!(run.skipped_samples, 0);
        // cosh phi >= 1 at every sample (reversed Cauchy-Schwarz)
        for s in &run.samples {
            assert!(s.cosh_phi >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn wrong_girth_is_rejected_by_the_gate() {
        let case = catalog::load("clairaut-cosh").unwrap();
        let bad = crate::dsl::parser::parse_expr("t", &case.ctx.spec.total.coords).unwrap();
        let err = clairaut_drift(&case.ctx, &bad, &[0.2, 0.0, 0.0], &[0.2, 0.9, 0.3], 1e-3, 10)
            .unwrap_err();
        assert!(err.to_string().contains("not a Clairaut submersion"));
    }

    #[test]
    fn mixed_ode_holds_on_affine_warp() {
        let case = catalog::load("mixed-flat-affine").unwrap();
        let run = mixed_ode_residual(&case.ctx, &[0.3, 0.0], &[1.0, 0.0], 1e-3, 1200).unwrap();
        assert!(run.skipped.is_none(), "{:?}", run.skipped);
        assert!(run.residual <= 1e-4, "ode residual {:.3e}", run.residual);
    }

    #[test]
    fn mixed_ode_trivial_on_flat_torus() {
        let case = catalog::load("lorentz-flat-torus").unwrap();
        let run = mixed_ode_residual(&case.ctx, &[0.1, 0.1], &[1.0, 0.0], 1e-2, 200).unwrap();
        assert!(run.skipped.is_none());
        assert!(run.residual < 1e-14);
    }

    #[test]
    fn mixed_ode_gate_skips_cosh_model() {
        // mixed curvature is -1 there, so the ODE does not apply
        let case = catalog::load("clairaut-cosh").unwrap();
        let run = mixed_ode_residual(&case.ctx, &[0.2, 0.0, 0.0], &[1.0, 0.0, 0.0], 1e-3, 100)
            .unwrap();
        assert!(run.skipped.is_some());
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let case = catalog::load("clairaut-cosh").unwrap();
        let girth = case.girth_log().unwrap().unwrap();
        let traj = integrate_geodesic(
            &case.ctx.total,
            &case.ctx.spec.total.coords,
            &[0.1, 0.0, 0.0],
            &[0.1, 0.8, 0.1],
            1e-2,
            10,
        IntegrateOpts::default(),
        )
        .unwrap();
        let csv = trajectory_csv(&case.ctx, &traj, Some(&girth)).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,t,x,y,v_t,v_x,v_y,g_vv,cosh_phi,w_cosh_phi"
        );
        assert_eq!(csv.lines().count(), 12);
    }
}
