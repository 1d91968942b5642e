//! Quadrature over chart boxes with the semi-Riemannian volume density, and
//! the global integral formulas as residual checks.
//!
//! Periodic coordinates use the periodic trapezoid rule (spectrally exact for
//! smooth periodic integrands); bounded coordinates use Gauss-Legendre nodes
//! on the declared interval. Sums run as a fixed-shape pairwise tree so
//! results are identical however many worker threads evaluate the nodes.

use rayon::prelude::*;

use crate::dsl::ast::{add, call, mul, Expr};
use crate::error::{Error, Result};
use crate::geometry::CurvatureAtPoint;
use crate::grid::{rng_for, uniform_components};
use crate::identities::{fit_mixed_c, s_horizontal, tau_hv, Case, SamplePoint, GATE_TOL};
use crate::jet::{Func, Jet2};
use crate::manifold::{Chart, ManifoldSpec};
use crate::report::IdentityReport;
use crate::submersion::{basicness_residual, fibre_points, SubPoint};

/// Integral formula names and anchors, in report order.
pub const FORMULAS: &[(&str, &str)] = &[
    (
        "base_integral",
        "tau = [div'(pH) - g'(pH,pH)/r + g'(A,A)] o pi; int_B tau' = -int_B g'(pH,pH)/r + int_B g'(A,A)",
    ),
    (
        "constant_curvature_integral",
        "r n c vol(B) = -(1/r) int_B g'(pH,pH) + int_B g'(A,A)",
    ),
    (
        "divergence_theorem",
        "int div(E) dv = 0 for smooth fields on closed charts",
    ),
    (
        "laplacian_identity",
        "lap f / 2 = f [3(f - c) + n c - g'(A,A)/r], f = c + g'(pH/r, pH/r)",
    ),
    (
        "ranjan_integral",
        "int tau^HV dv = (1 - 1/r) int g(H,H) dv + int g(A,A) dv",
    ),
    (
        "sH_integral",
        "int (s^H - s') dv = (1 - 1/r) int g(H,H) dv - 2 int g(A,A) dv",
    ),
    (
        "total_scalar",
        "S - (S' + Sfib) = (1 - 1/r) int g(H,H) dv - int g(A,A) dv",
    ),
];

pub fn anchor_of(name: &str) -> Result<&'static str> {
    FORMULAS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, a)| *a)
        .ok_or_else(|| Error::UnknownFormula(name.to_string()))
}

/// Relative tolerance for the global integral identities.
pub const INTEGRAL_TOL: f64 = 1e-6;
/// Absolute tolerance for the divergence-theorem witness.
pub const DIVERGENCE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug)]
pub struct QuadConfig {
    pub periodic_nodes: usize,
    pub bounded_nodes: usize,
    pub seed: u64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            periodic_nodes: 64,
            bounded_nodes: 32,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Axis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        // recompute for the weight
        let mut p0 = 1.0;
        let mut p1 = x;
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    pub axes: Vec<Axis>,
}

impl QuadratureGrid {
    pub fn build(spec: &ManifoldSpec, cfg: &QuadConfig) -> QuadratureGrid {
        let axes = (0..spec.dim)
            .map(|i| {
                let (lo, hi) = spec.domain[i];
                match spec.periodic[i] {
                    Some(t) => {
                        let n = cfg.periodic_nodes;
                        Axis {
                            nodes: (0..n).map(|k| lo + k as f64 * t / n as f64).collect(),
                            weights: vec![t / n as f64; n],
                        }
                    }
                    None => {
                        let n = cfg.bounded_nodes;
                        let (xs, ws) = gauss_legendre(n);
                        let half = 0.5 * (hi - lo);
                        let mid = 0.5 * (hi + lo);
                        Axis {
                            nodes: xs.iter().map(|x| mid + half * x).collect(),
                            weights: ws.iter().map(|w| w * half).collect(),
                        }
                    }
                }
            })
            .collect();
        QuadratureGrid { axes }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.nodes.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, mut idx: usize) -> (Vec<f64>, f64) {
        let mut p = Vec::with_capacity(self.axes.len());
        let mut w = 1.0;
        for axis in &self.axes {
            let k = idx % axis.nodes.len();
            idx /= axis.nodes.len();
            p.push(axis.nodes[k]);
            w *= axis.weights[k];
        }
        (p, w)
    }
}

/// Fixed-shape pairwise summation: deterministic regardless of threading.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Integrate a scalar evaluator against the volume density `sqrt|det g|`.
pub fn integrate<F>(chart: &Chart, grid: &QuadratureGrid, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let terms: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (p, w) = grid.node(idx);
            let dens = chart.volume_density(&p)?;
            Ok(w * dens * f(&p)?)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms))
}

fn rel(l: f64, r: f64) -> f64 {
    (l - r).abs() / (1.0 + l.abs() + r.abs())
}

/// Per-node submersion data used by all the total-space integral checks.
struct NodeRow {
    w_dens: f64,
    tau: f64,
    ghh: f64,
    gaa: f64,
    s: f64,
    s_base: f64,
    s_fibre: f64,
    s_h: f64,
}

fn node_rows(case: &Case, grid: &QuadratureGrid) -> Result<Vec<NodeRow>> {
    let ctx = &case.ctx;
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (p, w) = grid.node(idx);
            let pt = {
                let sp = SubPoint::compute(ctx, &p)?;
                let curv = CurvatureAtPoint::compute(&ctx.total, &p)?;
                let base_curv = CurvatureAtPoint::compute(&ctx.base, &sp.base_x)?;
                SamplePoint {
                    sp,
                    curv,
                    base_curv,
                }
            };
            let sp = &pt.sp;
            let dens = ctx.total.volume_density(&p)?;
            let h = sp.h_values();
            let s_fibre = if !ctx.spec.coordinate_aligned || ctx.r == 1 {
                0.0
            } else {
                let fspec = ctx.spec.total.fibre_slice(ctx.n, &p);
                CurvatureAtPoint::compute(&fspec.chart(), &p[ctx.n..])?.scalar()
            };
            Ok(NodeRow {
                w_dens: w * dens,
                tau: tau_hv(&pt),
                ghh: sp.gdot(&h, &h),
                gaa: sp.norm_a2().0,
                s: pt.curv.scalar(),
                s_base: pt.base_curv.scalar(),
                s_fibre,
                s_h: s_horizontal(&pt),
            })
        })
        .collect()
}

fn weighted(rows: &[NodeRow], f: impl Fn(&NodeRow) -> f64) -> f64 {
    let terms: Vec<f64> = rows.iter().map(|r| r.w_dens * f(r)).collect();
    pairwise_sum(&terms)
}

/// Umbilicity gate over a coarse grid (shared by the integral checks).
fn umbilicity_gate(case: &Case) -> Result<Option<String>> {
    let grid = crate::grid::standard_grid(&case.ctx.spec.total);
    let mut worst: f64 = 0.0;
    for p in grid.iter() {
        let sp = SubPoint::compute(&case.ctx, p)?;
        worst = worst.max(sp.umbilicity_residual());
    }
    Ok(if worst > GATE_TOL {
        Some(format!(
            "umbilicity gate: residual {worst:.3e} exceeds {GATE_TOL:.0e}"
        ))
    } else {
        None
    })
}

fn h_basic_residual(case: &Case) -> Result<f64> {
    let ctx = &case.ctx;
    let grid = crate::grid::standard_grid(&ctx.spec.total);
    let mut worst: f64 = 0.0;
    for anchor in [0, grid.len() / 2] {
        let pts = fibre_points(ctx, &grid[anchor], 8)?;
        let owned: Vec<SubPoint> = pts
            .iter()
            .map(|q| SubPoint::compute(ctx, q))
            .collect::<Result<_>>()?;
        let refs: Vec<&SubPoint> = owned.iter().collect();
        worst = worst.max(basicness_residual(ctx, &refs, |sp| Ok(sp.h_values()))?);
    }
    Ok(worst)
}

/// Caches the expensive per-node sweeps so one invocation shares them across
/// formulas.
pub struct QuadRun<'c> {
    case: &'c Case,
    cfg: QuadConfig,
    total_rows: Option<Vec<NodeRow>>,
    base_rows: Option<Vec<BaseRow>>,
    umbilic_reason: Option<Option<String>>,
}

impl<'c> QuadRun<'c> {
    pub fn new(case: &'c Case, cfg: QuadConfig) -> QuadRun<'c> {
        QuadRun {
            case,
            cfg,
            total_rows: None,
            base_rows: None,
            umbilic_reason: None,
        }
    }

    fn total_rows(&mut self) -> Result<&[NodeRow]> {
        if self.total_rows.is_none() {
            let grid = QuadratureGrid::build(&self.case.ctx.spec.total, &self.cfg);
            self.total_rows = Some(node_rows(self.case, &grid)?);
        }
        Ok(self.total_rows.as_deref().unwrap())
    }

    fn base_rows(&mut self, section: &[Expr]) -> Result<&[BaseRow]> {
        if self.base_rows.is_none() {
            let grid = QuadratureGrid::build(&self.case.ctx.spec.base, &self.cfg);
            self.base_rows = Some(base_rows(self.case, section, &grid)?);
        }
        Ok(self.base_rows.as_deref().unwrap())
    }

    fn umbilic_gate(&mut self) -> Result<Option<String>> {
        if self.umbilic_reason.is_none() {
            self.umbilic_reason = Some(umbilicity_gate(self.case)?);
        }
        Ok(self.umbilic_reason.clone().unwrap())
    }

    pub fn run(&mut self, name: &str) -> Result<IdentityReport> {
        match name {
            "ranjan_integral" => check_ranjan_integral(self),
            "total_scalar" => check_total_scalar(self),
            "sH_integral" => check_sh_integral(self),
            "base_integral" => check_base_integral(self),
            "constant_curvature_integral" => check_constant_curvature_integral(self),
            "divergence_theorem" => check_divergence_theorem(self.case, &self.cfg),
            "laplacian_identity" => check_laplacian_identity(self.case, &self.cfg),
            _ => Err(Error::UnknownFormula(name.to_string())),
        }
    }
}

pub fn run_formula(case: &Case, name: &str, cfg: &QuadConfig) -> Result<IdentityReport> {
    QuadRun::new(case, *cfg).run(name)
}

/// Run a list of formulas (or all) sorted by name, sharing node sweeps.
pub fn run_formulas(case: &Case, names: &[String], cfg: &QuadConfig) -> Result<Vec<IdentityReport>> {
    let all: Vec<&str> = FORMULAS.iter().map(|(n, _)| *n).collect();
    let wanted: Vec<String> = if names.len() == 1 && names[0] == "all" {
        all.iter().map(|s| s.to_string()).collect()
    } else {
        for n in names {
            if !all.contains(&n.as_str()) {
                return Err(Error::UnknownFormula(n.clone()));
            }
        }
        names.to_vec()
    };
    let mut run = QuadRun::new(case, *cfg);
    let mut out = Vec::with_capacity(wanted.len());
    for n in &wanted {
        out.push(run.run(n)?);
    }
    out.sort_by(|a, b| a.identity.cmp(&b.identity));
    Ok(out)
}

fn check_ranjan_integral(run: &mut QuadRun) -> Result<IdentityReport> {
    let name = "ranjan_integral";
    if !run.case.compact {
        return Ok(IdentityReport::skipped(
            name,
            anchor_of(name)?,
            INTEGRAL_TOL,
            "total chart has a boundary (not a closed manifold)",
        ));
    }
    if let Some(reason) = run.umbilic_gate()? {
        return Ok(IdentityReport::skipped(
            name,
            anchor_of(name)?,
            INTEGRAL_TOL,
            reason,
        ));
    }
    let rf = run.case.ctx.r as f64;
    let rows = run.total_rows()?;
    let lhs = weighted(rows, |r| r.tau);
    let rhs = (1.0 - 1.0 / rf) * weighted(rows, |r| r.ghh) + weighted(rows, |r| r.gaa);
    Ok(IdentityReport::from_residuals(
        name,
        anchor_of(name)?,
        &[rel(lhs, rhs)],
        INTEGRAL_TOL,
    ))
}

fn check_total_scalar(run: &mut QuadRun) -> Result<IdentityReport> {
    let name = "total_scalar";
    if !run.case.compact {
        return Ok(IdentityReport::skipped(
            name,
            anchor_of(name)?,
            INTEGRAL_TOL,
            "total chart has a boundary (not a closed manifold)",
        ));
    }
    if !run.case.ctx.spec.coordinate_aligned && run.case.ctx.r > 1 {
        return Ok(IdentityReport::skipped(
            name,
            anchor_of(name)?,
            INTEGRAL_TOL,
            "fibre scalar needs an aligned chart",
        ));
    }
    if let Some(reason) = run.umbilic_gate()? {
        return Ok(IdentityReport::skipped(
            name,
            anchor_of(name)?,
            INTEGRAL_TOL,
            reason,
        ));
    }
    let rf = run.case.ctx.r as f64;
    let rows = run.total_rows()?;
    let lhs = weighted(rows, |r| r.s - r.s_base - r.s_fibre);
    let rhs = (1.0 - 1.0 / rf) * weighted(rows, |r| r.ghh) - weighted(rows, |r| r.gaa);
    Ok(IdentityReport::from_residuals(
        name,
        anchor_of(name)?,
        &[rel(lhs, rhs)],
        INTEGRAL_TOL,
    ))
}

fn check_sh_integral(run: &mut QuadRun) -> Result<IdentityReport> {
    let name = "sH_integral";
    if !run.case.compact {
        return Ok(IdentityReport::skipped(
            name,
            anchor_of(name)?,
            INTEGRAL_TOL,
            "total chart has a boundary (not a closed manifold)",
        ));
    }
    if let Some(reason) = run.umbilic_gate()? {
        return Ok(IdentityReport::skipped(
            name,
            anchor_of(name)?,
            INTEGRAL_TOL,
            reason,
        ));
    }
    let rf = run.case.ctx.r as f64;
    let rows = run.total_rows()?;
    let lhs = weighted(rows, |r| r.s_h - r.s_base);
    let rhs = (1.0 - 1.0 / rf) * weighted(rows, |r| r.ghh) - 2.0 * weighted(rows, |r| r.gaa);
    Ok(IdentityReport::from_residuals(
        name,
        anchor_of(name)?,
        &[rel(lhs, rhs)],
        INTEGRAL_TOL,
    ))
}

/// Base-point data for the pushed-down checks, evaluated through a section.
struct BaseRow {
    w_dens: f64,
    tau: f64,
    div_ph: f64,
    g_ph_ph: f64,
    gaa: f64,
}

fn base_rows(case: &Case, section: &[Expr], grid: &QuadratureGrid) -> Result<Vec<BaseRow>> {
    let ctx = &case.ctx;
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (b, w) = grid.node(idx);
            let total: Vec<f64> = section
                .iter()
                .map(|e| e.eval(&b))
                .collect::<std::result::Result<_, _>>()?;
            let total = ctx.spec.total.reduce(&total);
            let sp = SubPoint::compute(ctx, &total)?;
            let curv = CurvatureAtPoint::compute(&ctx.total, &total)?;
            let base_curv = CurvatureAtPoint::compute(&ctx.base, &sp.base_x)?;
            let pt = SamplePoint {
                sp,
                curv,
                base_curv,
            };
            let sp = &pt.sp;

            // div'(pi_* H) via base partials of the pushed components
            let hp = sp.push_j(&sp.h);
            let mut div_ph = 0.0;
            for k in 0..ctx.n {
                div_ph += sp.pushdown_grad(&hp[k])?[k];
            }
            let gamma_b = ctx.base.christoffel_at(&sp.base_x)?;
            for k in 0..ctx.n {
                for l in 0..ctx.n {
                    div_ph += gamma_b[k][k][l] * hp[l].value;
                }
            }
            let bg = &pt.base_curv.metric.g;
            let mut g_ph_ph = 0.0;
            for k in 0..ctx.n {
                for l in 0..ctx.n {
                    g_ph_ph += bg[k][l] * hp[k].value * hp[l].value;
                }
            }
            let dens = ctx.base.volume_density(&sp.base_x)?;
            Ok(BaseRow {
                w_dens: w * dens,
                tau: tau_hv(&pt),
                div_ph,
                g_ph_ph,
                gaa: sp.norm_a2().0,
            })
        })
        .collect()
}

fn tau_fibre_constancy(case: &Case) -> Result<f64> {
    let ctx = &case.ctx;
    let grid = crate::grid::standard_grid(&ctx.spec.total);
    let mut worst: f64 = 0.0;
    for anchor in [0, grid.len() / 3, 2 * grid.len() / 3] {
        let pts = fibre_points(ctx, &grid[anchor], 6)?;
        let mut vals = Vec::new();
        for q in &pts {
            let sp = SubPoint::compute(ctx, q)?;
            let curv = CurvatureAtPoint::compute(&ctx.total, q)?;
            let base_curv = CurvatureAtPoint::compute(&ctx.base, &sp.base_x)?;
            vals.push(tau_hv(&SamplePoint {
                sp,
                curv,
                base_curv,
            }));
        }
        let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - vals.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.max(spread);
    }
    Ok(worst)
}

fn check_base_integral(run: &mut QuadRun) -> Result<IdentityReport> {
    let name = "base_integral";
    let anchor = anchor_of(name)?;
    let case = run.case;
    if let Some(reason) = run.umbilic_gate()? {
        return Ok(IdentityReport::skipped(name, anchor, INTEGRAL_TOL, reason));
    }
    let Some(section) = case.section.clone() else {
        return Ok(IdentityReport::skipped(
            name,
            anchor,
            INTEGRAL_TOL,
            "no section through the fibres is available",
        ));
    };
    let hb = h_basic_residual(case)?;
    if hb > GATE_TOL {
        return Ok(IdentityReport::skipped(
            name,
            anchor,
            INTEGRAL_TOL,
            format!("H not basic: fibre spread {hb:.3e}"),
        ));
    }
    let tf = tau_fibre_constancy(case)?;
    if tf > GATE_TOL {
        return Ok(IdentityReport::skipped(
            name,
            anchor,
            INTEGRAL_TOL,
            format!("tau^HV not constant along fibres: spread {tf:.3e}"),
        ));
    }

    let rf = case.ctx.r as f64;
    let compact_base = case.compact_base;
    let rows = run.base_rows(&section)?;

    // pointwise pushed-down identity at every base node
    let mut residuals: Vec<f64> = rows
        .iter()
        .map(|r| rel(r.tau, r.div_ph - r.g_ph_ph / rf + r.gaa))
        .collect();

    // the base integral needs a closed base
    if compact_base {
        let lhs = weighted_base(rows, |r| r.tau);
        let rhs =
            -(1.0 / rf) * weighted_base(rows, |r| r.g_ph_ph) + weighted_base(rows, |r| r.gaa);
        residuals.push(rel(lhs, rhs));
    }
    Ok(IdentityReport::from_residuals(
        name,
        anchor,
        &residuals,
        INTEGRAL_TOL,
    ))
}

fn weighted_base(rows: &[BaseRow], f: impl Fn(&BaseRow) -> f64) -> f64 {
    let terms: Vec<f64> = rows.iter().map(|r| r.w_dens * f(r)).collect();
    pairwise_sum(&terms)
}

fn check_constant_curvature_integral(run: &mut QuadRun) -> Result<IdentityReport> {
    let name = "constant_curvature_integral";
    let anchor = anchor_of(name)?;
    let case = run.case;
    let Some(c) = case.constant_c else {
        return Ok(IdentityReport::skipped(
            name,
            anchor,
            INTEGRAL_TOL,
            "no constant-curvature tag",
        ));
    };
    if !case.compact_base {
        return Ok(IdentityReport::skipped(
            name,
            anchor,
            INTEGRAL_TOL,
            "base chart has a boundary (not a closed manifold)",
        ));
    }
    if let Some(reason) = run.umbilic_gate()? {
        return Ok(IdentityReport::skipped(name, anchor, INTEGRAL_TOL, reason));
    }
    let Some(section) = case.section.clone() else {
        return Ok(IdentityReport::skipped(
            name,
            anchor,
            INTEGRAL_TOL,
            "no section through the fibres is available",
        ));
    };
    let hb = h_basic_residual(case)?;
    if hb > GATE_TOL {
        return Ok(IdentityReport::skipped(
            name,
            anchor,
            INTEGRAL_TOL,
            format!("H not basic: fibre spread {hb:.3e}"),
        ));
    }
    let rf = case.ctx.r as f64;
    let nf = case.ctx.n as f64;
    let rows = run.base_rows(&section)?;
    let vol_b = weighted_base(rows, |_| 1.0);
    let lhs = rf * nf * c * vol_b;
    let rhs = -(1.0 / rf) * weighted_base(rows, |r| r.g_ph_ph) + weighted_base(rows, |r| r.gaa);
    Ok(IdentityReport::from_residuals(
        name,
        anchor,
        &[rel(lhs, rhs)],
        INTEGRAL_TOL,
    ))
}

/// Seeded smooth random field: trig in periodic coordinates, with a factor
/// vanishing at the ends of every bounded coordinate so boundary flux is zero
/// by construction.
fn random_field(spec: &ManifoldSpec, seed: u64, which: usize) -> Vec<Expr> {
    let mut rng = rng_for(seed, "divergence_field", which);
    let mut comps = Vec::with_capacity(spec.dim);
    for a in 0..spec.dim {
        let cs = uniform_components(&mut rng, 2 * spec.dim + 1);
        let mut e = Expr::Const(cs[0]);
        for (j, period) in spec.periodic.iter().enumerate() {
            if let Some(t) = period {
                let k = std::f64::consts::TAU / t;
                let phase = cs[2 * j + 1] * std::f64::consts::PI;
                e = add(
                    e,
                    mul(
                        Expr::Const(cs[2 * j + 2]),
                        call(
                            Func::Sin,
                            add(
                                mul(Expr::coord(j, &spec.coords[j]), Expr::Const(k)),
                                Expr::Const(phase),
                            ),
                        ),
                    ),
                );
            }
        }
        for (j, period) in spec.periodic.iter().enumerate() {
            if period.is_none() {
                let (lo, hi) = spec.domain[j];
                let k = std::f64::consts::PI / (hi - lo);
                e = mul(
                    e,
                    call(
                        Func::Sin,
                        mul(
                            add(Expr::coord(j, &spec.coords[j]), Expr::Const(-lo)),
                            Expr::Const(k),
                        ),
                    ),
                );
            }
        }
        let _ = a;
        comps.push(e);
    }
    comps
}

fn check_divergence_theorem(case: &Case, cfg: &QuadConfig) -> Result<IdentityReport> {
    let name = "divergence_theorem";
    let anchor = anchor_of(name)?;
    if !case.compact {
        return Ok(IdentityReport::skipped(
            name,
            anchor,
            DIVERGENCE_TOL,
            "total chart has a boundary (not a closed manifold)",
        ));
    }
    let spec = &case.ctx.spec.total;
    let chart = &case.ctx.total;
    let grid = QuadratureGrid::build(spec, cfg);
    let mut residuals = Vec::with_capacity(5);
    for which in 0..5 {
        let field = random_field(spec, cfg.seed, which);
        let integral = integrate(chart, &grid, |p| {
            let curv = CurvatureAtPoint::compute(chart, p)?;
            let jets = chart.lift(p);
            let mut fj: Vec<Jet2> = Vec::with_capacity(spec.dim);
            for e in &field {
                fj.push(e.eval(&jets)?);
            }
            Ok(curv.divergence(&fj))
        })?;
        residuals.push(integral.abs());
    }
    Ok(IdentityReport::from_residuals(
        name,
        anchor,
        &residuals,
        DIVERGENCE_TOL,
    ))
}

/// Laplacian on base functions: `div(grad f)` from jet data and base
/// Christoffel symbols.
pub fn laplacian_base(base: &Chart, f: &Expr, b: &[f64]) -> Result<f64> {
    let curv = CurvatureAtPoint::compute(base, b)?;
    let jets = base.lift(b);
    let fj: Jet2 = f.eval(&jets)?;
    let n = base.dim;
    let mut acc = 0.0;
    for k in 0..n {
        for l in 0..n {
            let mut hess_cov = fj.hess(k, l);
            for c in 0..n {
                hess_cov -= curv.gamma[c][k][l] * fj.grad[c];
            }
            acc += curv.metric.g_inv[k][l] * hess_cov;
        }
    }
    Ok(acc)
}

fn check_laplacian_identity(case: &Case, cfg: &QuadConfig) -> Result<IdentityReport> {
    let name = "laplacian_identity";
    let anchor = anchor_of(name)?;
    if let Some(reason) = umbilicity_gate(case)? {
        return Ok(IdentityReport::skipped(name, anchor, INTEGRAL_TOL, reason));
    }
    let Some(fstar) = &case.f_star else {
        return Ok(IdentityReport::skipped(
            name,
            anchor,
            INTEGRAL_TOL,
            "no closed form of c + g'(pH/r, pH/r) supplied",
        ));
    };
    let Some(section) = &case.section else {
        return Ok(IdentityReport::skipped(
            name,
            anchor,
            INTEGRAL_TOL,
            "no section through the fibres is available",
        ));
    };
    // determine c as the identity suite does
    let grid_pts = crate::grid::standard_grid(&case.ctx.spec.total);
    let points: Vec<SamplePoint> = grid_pts
        .par_iter()
        .map(|p| {
            let sp = SubPoint::compute(&case.ctx, p)?;
            let curv = CurvatureAtPoint::compute(&case.ctx.total, p)?;
            let base_curv = CurvatureAtPoint::compute(&case.ctx.base, &sp.base_x)?;
            Ok(SamplePoint {
                sp,
                curv,
                base_curv,
            })
        })
        .collect::<Result<_>>()?;
    let h_zero = points
        .iter()
        .map(|pt| pt.sp.frame_norm(&pt.sp.h_values()))
        .fold(0.0_f64, f64::max);
    let c = if h_zero <= GATE_TOL {
        case.constant_c.unwrap_or(0.0)
    } else {
        match fit_mixed_c(&points) {
            Some((c, resid)) if resid <= GATE_TOL => c,
            Some((c, resid)) => {
                return Ok(IdentityReport::skipped(
                    name,
                    anchor,
                    INTEGRAL_TOL,
                    format!(
                        "vertical Ricci ratio is not constant (c ~ {c:.4}, residual {resid:.3e})"
                    ),
                ))
            }
            None => {
                return Ok(IdentityReport::skipped(
                    name,
                    anchor,
                    INTEGRAL_TOL,
                    "vertical Ricci relation is degenerate",
                ))
            }
        }
    };

    let ctx = &case.ctx;
    let grid = QuadratureGrid::build(&ctx.spec.base, cfg);
    let nf = ctx.n as f64;
    let rf = ctx.r as f64;
    let residuals: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (b, _) = grid.node(idx);
            let total: Vec<f64> = section
                .iter()
                .map(|e| e.eval(&b))
                .collect::<std::result::Result<_, _>>()?;
            let total = ctx.spec.total.reduce(&total);
            let sp = SubPoint::compute(ctx, &total)?;
            // validate the closed form against the pipeline value of
            // c + g'(pH/r, pH/r) before trusting its derivatives
            let bg = ctx.base.metric_at(&sp.base_x)?;
            let hp = sp.push(&sp.h_values());
            let mut gphph = 0.0;
            for k in 0..ctx.n {
                for l in 0..ctx.n {
                    gphph += bg[k][l] * hp[k] * hp[l];
                }
            }
            let f_pipeline = c + gphph / (rf * rf);
            let f_val: f64 = fstar.eval(&ctx.base.reduce_point(&sp.base_x))?;
            if (f_val - f_pipeline).abs() > 1e-7 * (1.0 + f_pipeline.abs()) {
                return Err(Error::Invalid(format!(
                    "closed form of c + g'(pH/r,pH/r) disagrees with the pipeline at {:?}: {f_val} vs {f_pipeline}",
                    sp.base_x
                )));
            }
            let lhs = 0.5 * laplacian_base(&ctx.base, fstar, &sp.base_x)?;
            let gaa = sp.norm_a2().0;
            let rhs = f_val * (3.0 * (f_val - c) + nf * c - gaa / rf);
            Ok(rel(lhs, rhs))
        })
        .collect::<Result<_>>()?;
    Ok(IdentityReport::from_residuals(
        name,
        anchor,
        &residuals,
        INTEGRAL_TOL,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::identities::Case;

    fn case(id: &str) -> Case {
        Case::from_catalog(&catalog::load(id).unwrap()).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (xs, ws) = gauss_legendre(8);
        // integral of x^6 over [-1,1] = 2/7
        let v: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(6)).sum();
        assert!((v - 2.0 / 7.0).abs() < 1e-14);
        let total: f64 = ws.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn flat_torus_measure_is_four_pi_squared() {
        let c = case("lorentz-flat-torus");
        let grid = QuadratureGrid::build(&c.ctx.spec.total, &QuadConfig::default());
        let vol = integrate(&c.ctx.total, &grid, |_| Ok(1.0)).unwrap();
        let expect = (2.0 * std::f64::consts::PI).powi(2);
        assert!((vol - expect).abs() < 1e-10, "vol = {vol}");
    }

    #[test]
    fn periodic_trapezoid_is_exact_on_harmonics() {
        let src = "manifold s1 { dim 1 signature 0 coords th periodic th 6.283185307179586
            metric { g[0][0] = 1 } }";
        let spec = &crate::manifold::parse_specs(src).unwrap().manifolds[0];
        let chart = spec.chart();
        let grid = QuadratureGrid::build(spec, &QuadConfig::default());
        let v = integrate(&chart, &grid, |p| Ok(p[0].cos())).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn warped_t2_volume_matches_closed_form() {
        // vol = 2*pi * int (2 + cos th) dth = 8 pi^2
        let c = case("warped-lorentz-t2");
        let grid = QuadratureGrid::build(&c.ctx.spec.total, &QuadConfig::default());
        let vol = integrate(&c.ctx.total, &grid, |_| Ok(1.0)).unwrap();
        let expect = 8.0 * std::f64::consts::PI.powi(2);
        assert!((vol - expect).abs() < 1e-8, "vol = {vol}");
    }

    #[test]
    fn doubling_nodes_improves_a_nonpolynomial_integral() {
        // exp(sin th) on the circle: trapezoid error decays spectrally
        let src = "manifold s1 { dim 1 signature 0 coords th periodic th 6.283185307179586
            metric { g[0][0] = 1 } }";
        let spec = &crate::manifold::parse_specs(src).unwrap().manifolds[0];
        let chart = spec.chart();
        let reference = {
            let grid = QuadratureGrid::build(
                spec,
                &QuadConfig {
                    periodic_nodes: 256,
                    ..Default::default()
                },
            );
            integrate(&chart, &grid, |p| Ok(p[0].sin().exp())).unwrap()
        };
        let err_at = |n: usize| {
            let grid = QuadratureGrid::build(
                spec,
                &QuadConfig {
                    periodic_nodes: n,
                    ..Default::default()
                },
            );
            (integrate(&chart, &grid, |p| Ok(p[0].sin().exp())).unwrap() - reference).abs()
        };
        let e4 = err_at(4);
        let e8 = err_at(8);
        assert!(e4 > 1e-12, "error at 4 nodes should be visible: {e4:e}");
        assert!(e8 * 10.0 <= e4, "doubling must gain 10x: {e4:e} -> {e8:e}");
    }

    #[test]
    fn ranjan_integral_on_compact_entries() {
        for id in ["lorentz-flat-torus", "warped-lorentz-t2", "warped-lorentz-t3"] {
            let c = case(id);
            let cfg = QuadConfig {
                periodic_nodes: if c.ctx.m == 3 { 32 } else { 64 },
                ..Default::default()
            };
            let r = run_formula(&c, "ranjan_integral", &cfg).unwrap();
            assert!(r.skipped.is_none(), "{id}");
            assert!(r.pass, "{id}: residual {:.3e}", r.max_residual);
        }
    }

    #[test]
    fn integral_checks_skip_on_window_charts() {
        let c = case("clairaut-cosh");
        let r = run_formula(&c, "ranjan_integral", &QuadConfig::default()).unwrap();
        assert!(r.skipped.is_some());
    }

    #[test]
    fn total_scalar_on_warped_t3() {
        let c = case("warped-lorentz-t3");
        let cfg = QuadConfig {
            periodic_nodes: 32,
            ..Default::default()
        };
        let r = run_formula(&c, "total_scalar", &cfg).unwrap();
        assert!(r.skipped.is_none());
        assert!(r.pass, "residual {:.3e}", r.max_residual);
    }

    #[test]
    fn sh_integral_on_warped_t2() {
        let c = case("warped-lorentz-t2");
        let r = run_formula(&c, "sH_integral", &QuadConfig::default()).unwrap();
        assert!(r.skipped.is_none());
        assert!(r.pass, "residual {:.3e}", r.max_residual);
    }

    #[test]
    fn base_integral_on_warped_t3_and_hopf() {
        for id in ["warped-lorentz-t3", "hopf"] {
            let c = case(id);
            let cfg = QuadConfig {
                periodic_nodes: 48,
                bounded_nodes: 32,
                seed: 42,
            };
            let r = run_formula(&c, "base_integral", &cfg).unwrap();
            assert!(r.skipped.is_none(), "{id}: {:?}", r.skipped);
            assert!(r.pass, "{id}: residual {:.3e}", r.max_residual);
        }
    }

    #[test]
    fn constant_curvature_integral_on_hopf() {
        let c = case("hopf");
        let r = run_formula(&c, "constant_curvature_integral", &QuadConfig::default()).unwrap();
        assert!(r.skipped.is_none(), "{:?}", r.skipped);
        assert!(r.pass, "residual {:.3e}", r.max_residual);
    }

    #[test]
    fn divergence_theorem_on_flat_and_warped() {
        for id in ["lorentz-flat-torus", "warped-lorentz-t2"] {
            let c = case(id);
            let r = run_formula(&c, "divergence_theorem", &QuadConfig::default()).unwrap();
            assert!(r.skipped.is_none());
            assert_eq!(r.samples, 5);
            assert!(r.pass, "{id}: residual {:.3e}", r.max_residual);
        }
    }

    #[test]
    fn laplacian_identity_on_girth_models() {
        for id in ["clairaut-cosh", "critical-exp", "mixed-flat-affine", "hopf"] {
            let c = case(id);
            let r = run_formula(&c, "laplacian_identity", &QuadConfig::default()).unwrap();
            assert!(r.skipped.is_none(), "{id}: {:?}", r.skipped);
            assert!(r.pass, "{id}: residual {:.3e}", r.max_residual);
        }
    }

    #[test]
    fn laplacian_of_squared_coordinate() {
        // flat 1-dim base: lap(t^2) = 2
        let c = case("clairaut-cosh");
        let f = crate::dsl::parser::parse_expr("t^2", &c.ctx.spec.base.coords).unwrap();
        let v = laplacian_base(&c.ctx.base, &f, &[0.7]).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }
}
