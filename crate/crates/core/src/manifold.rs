//! Validated manifold and submersion definitions, and their compiled charts.

use serde::Serialize;

use crate::dsl::ast::Expr;
use crate::dsl::lexer::Diagnostic;
use crate::dsl::parser::{parse_file, FileAst, ManifoldAst, SubmersionAst};
use crate::error::Error;
use crate::jet::{Jet2, Scalar};
use crate::linalg::{self, Mat};

/// Tolerance below which a metric eigenvalue counts as degenerate.
pub const EIGENVALUE_FLOOR: f64 = 1e-10;
/// Tolerance on `|det g|` below which the metric is refused.
pub const DET_FLOOR: f64 = 1e-12;
/// Fraction of a bounded coordinate interval excluded from sample grids.
pub const INTERIOR_MARGIN: f64 = 0.05;

/// A chart-described semi-Riemannian manifold.
#[derive(Clone, Debug)]
pub struct ManifoldSpec {
    pub name: String,
    pub dim: usize,
    /// Count of negative metric eigenvalues (the index).
    pub signature: usize,
    pub coords: Vec<String>,
    pub periodic: Vec<Option<f64>>,
    pub domain: Vec<(f64, f64)>,
    /// Full symmetric matrix of component expressions.
    pub metric: Vec<Vec<Expr>>,
}

impl ManifoldSpec {
    pub fn from_ast(ast: &ManifoldAst) -> Result<ManifoldSpec, Diagnostic> {
        let m = ast.dim;
        let at = |l, c, msg: String| Diagnostic::new(l, c, msg);

        if ast.coords.len() != m {
            return Err(at(
                ast.line,
                ast.col,
                format!("{} coordinates declared for dim {m}", ast.coords.len()),
            ));
        }
        for (i, a) in ast.coords.iter().enumerate() {
            if ast.coords[..i].contains(a) {
                return Err(at(ast.line, ast.col, format!("duplicate coordinate `{a}`")));
            }
        }
        if ast.signature > m {
            return Err(at(
                ast.line,
                ast.col,
                format!("signature {} out of range 0..={m}", ast.signature),
            ));
        }

        let coord_index = |name: &str, l, c| {
            ast.coords
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| at(l, c, format!("unknown coordinate `{name}`")))
        };

        let mut periodic: Vec<Option<f64>> = vec![None; m];
        for (name, period, l, c) in &ast.periodic {
            let i = coord_index(name, *l, *c)?;
            if *period <= 0.0 {
                return Err(at(*l, *c, format!("period of `{name}` must be positive")));
            }
            periodic[i] = Some(*period);
        }

        let mut domain: Vec<Option<(f64, f64)>> = vec![None; m];
        for (name, lo, hi, l, c) in &ast.domain {
            let i = coord_index(name, *l, *c)?;
            if !(lo < hi) {
                return Err(at(*l, *c, format!("empty domain for `{name}`")));
            }
            domain[i] = Some((*lo, *hi));
        }
        let mut dom = Vec::with_capacity(m);
        for i in 0..m {
            match (domain[i], periodic[i]) {
                (Some(d), _) => dom.push(d),
                (None, Some(t)) => dom.push((0.0, t)),
                (None, None) => {
                    return Err(at(
                        ast.line,
                        ast.col,
                        format!(
                            "coordinate `{}` is neither periodic nor given a domain",
                            ast.coords[i]
                        ),
                    ))
                }
            }
        }

        let mut entries: Vec<Vec<Option<Expr>>> = vec![vec![None; m]; m];
        for (a, b, e, l, c) in &ast.entries {
            if *a >= m || *b >= m {
                return Err(at(*l, *c, format!("metric index ({a},{b}) out of range")));
            }
            let (lo, hi) = (usize::min(*a, *b), usize::max(*a, *b));
            match &entries[lo][hi] {
                None => entries[lo][hi] = Some(e.clone()),
                Some(prev) if prev == e => {}
                Some(_) => {
                    return Err(at(*l, *c, format!("symmetry conflict at ({a},{b})")));
                }
            }
        }
        let metric: Vec<Vec<Expr>> = (0..m)
            .map(|a| {
                (0..m)
                    .map(|b| {
                        let (lo, hi) = (usize::min(a, b), usize::max(a, b));
                        entries[lo][hi].clone().unwrap_or(Expr::Const(0.0))
                    })
                    .collect()
            })
            .collect();

        Ok(ManifoldSpec {
            name: ast.name.clone(),
            dim: m,
            signature: ast.signature,
            coords: ast.coords.clone(),
            periodic,
            domain: dom,
            metric,
        })
    }

    /// Reduce periodic coordinates into `[lo, lo + period)`.
    pub fn reduce(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| match self.periodic[i] {
                Some(t) => {
                    let lo = self.domain[i].0;
                    lo + (v - lo).rem_euclid(t)
                }
                None => v,
            })
            .collect()
    }

    /// True if non-periodic coordinates lie strictly inside their domains.
    pub fn in_chart(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(i, &v)| {
            self.periodic[i].is_some() || (v >= self.domain[i].0 && v <= self.domain[i].1)
        })
    }

    /// Check the eigenvalue split of the metric on the standard sample grid.
    pub fn validate_signature(&self, grid: &[Vec<f64>]) -> Result<(), Error> {
        let chart = self.chart();
        for p in grid {
            let g = chart.metric_at(p)?;
            let eigs = linalg::sym_eigenvalues(&g);
            let neg = eigs.iter().filter(|&&e| e < -EIGENVALUE_FLOOR).count();
            let pos = eigs.iter().filter(|&&e| e > EIGENVALUE_FLOOR).count();
            if neg != self.signature || pos != self.dim - self.signature {
                return Err(Error::SignatureMismatch {
                    manifold: self.name.clone(),
                    point: p.clone(),
                    expected_neg: self.signature,
                    eigenvalues: eigs,
                });
            }
        }
        Ok(())
    }

    /// Compile to an evaluable chart (symbolic first derivatives included).
    pub fn chart(&self) -> Chart {
        let m = self.dim;
        let dmetric = (0..m)
            .map(|c| {
                (0..m)
                    .map(|a| (0..m).map(|b| self.metric[a][b].diff(c)).collect())
                    .collect()
            })
            .collect();
        Chart {
            dim: m,
            metric: self.metric.clone(),
            dmetric,
            periodic: self.periodic.clone(),
            domain: self.domain.clone(),
        }
    }

    /// The fibre slice through `p` of a coordinate-aligned submersion with
    /// `base_dim` leading base coordinates: the trailing block of the metric
    /// with the leading coordinates frozen at `p`.
    pub fn fibre_slice(&self, base_dim: usize, p: &[f64]) -> ManifoldSpec {
        let r = self.dim - base_dim;
        let mut metric: Vec<Vec<Expr>> = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| self.metric[base_dim + i][base_dim + j].clone())
                    .collect()
            })
            .collect();
        for row in metric.iter_mut() {
            for e in row.iter_mut() {
                let mut cur = e.clone();
                // freeze leading coordinates one by one; indices shift down
                for k in 0..base_dim {
                    cur = cur.substitute_and_shift(0, p[k]);
                }
                *e = cur;
            }
        }
        ManifoldSpec {
            name: format!("{}-fibre", self.name),
            dim: r,
            // index of the fibre metric is not declared; callers only use
            // curvature quantities, which do not need it
            signature: 0,
            coords: self.coords[base_dim..].to_vec(),
            periodic: self.periodic[base_dim..].to_vec(),
            domain: self.domain[base_dim..].to_vec(),
            metric,
        }
    }
}

/// A validated submersion between two chart-described manifolds.
#[derive(Clone, Debug)]
pub struct SubmersionSpec {
    pub name: String,
    pub total: ManifoldSpec,
    pub base: ManifoldSpec,
    /// One expression per base coordinate, in total-space coordinates.
    pub map: Vec<Expr>,
    pub fibre_dim: usize,
    pub coordinate_aligned: bool,
}

impl SubmersionSpec {
    pub fn from_ast(
        ast: &SubmersionAst,
        manifolds: &[ManifoldSpec],
    ) -> Result<SubmersionSpec, Diagnostic> {
        let find = |name: &str| {
            manifolds
                .iter()
                .find(|m| m.name == name)
                .cloned()
                .ok_or_else(|| {
                    Diagnostic::new(ast.line, ast.col, format!("unknown manifold `{name}`"))
                })
        };
        let total = find(&ast.total)?;
        let base = find(&ast.base)?;

        if ast.map.len() != base.dim {
            return Err(Diagnostic::new(
                ast.line,
                ast.col,
                format!("map arity {} != base dim {}", ast.map.len(), base.dim),
            ));
        }
        if total.dim <= base.dim {
            return Err(Diagnostic::new(
                ast.line,
                ast.col,
                format!(
                    "fibre dimension {} is not positive",
                    total.dim as i64 - base.dim as i64
                ),
            ));
        }

        let mut map: Vec<Option<Expr>> = vec![None; base.dim];
        for (target, e, l, c) in &ast.map {
            let k = base.coords.iter().position(|s| s == target).ok_or_else(|| {
                Diagnostic::new(*l, *c, format!("`{target}` is not a base coordinate"))
            })?;
            if map[k].is_some() {
                return Err(Diagnostic::new(
                    *l,
                    *c,
                    format!("base coordinate `{target}` mapped twice"),
                ));
            }
            map[k] = Some(e.clone());
        }
        let map: Vec<Expr> = map
            .into_iter()
            .enumerate()
            .map(|(k, e)| {
                e.ok_or_else(|| {
                    Diagnostic::new(
                        ast.line,
                        ast.col,
                        format!("base coordinate `{}` has no map entry", base.coords[k]),
                    )
                })
            })
            .collect::<Result<_, _>>()?;

        // projection onto the first n total coordinates?
        let is_projection = map
            .iter()
            .enumerate()
            .all(|(k, e)| matches!(e, Expr::Coord { index, .. } if *index == k));
        let aligned = match ast.aligned {
            Some(true) => {
                if !is_projection {
                    return Err(Diagnostic::new(
                        ast.line,
                        ast.col,
                        "aligned submersions must project onto the leading total coordinates",
                    ));
                }
                true
            }
            Some(false) => false,
            None => is_projection,
        };

        Ok(SubmersionSpec {
            name: ast.name.clone(),
            fibre_dim: total.dim - base.dim,
            total,
            base,
            map,
            coordinate_aligned: aligned,
        })
    }

    /// Base image of a total point, reduced into the base chart.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, Error> {
        let mut out = Vec::with_capacity(self.base.dim);
        for e in &self.map {
            out.push(e.eval(x)?);
        }
        Ok(self.base.reduce(&out))
    }
}

/// Everything parsed and structurally validated from one definition file.
#[derive(Clone, Debug, Default)]
pub struct ParsedFile {
    pub manifolds: Vec<ManifoldSpec>,
    pub submersions: Vec<SubmersionSpec>,
}

/// Parse a definition file into validated specs (structural checks only;
/// grid-based checks live in [`ManifoldSpec::validate_signature`] and the
/// submersion axioms in the frame module).
pub fn parse_specs(src: &str) -> Result<ParsedFile, Diagnostic> {
    let FileAst {
        manifolds,
        submersions,
    } = parse_file(src)?;
    let manifolds: Vec<ManifoldSpec> = manifolds
        .iter()
        .map(ManifoldSpec::from_ast)
        .collect::<Result<_, _>>()?;
    let submersions = submersions
        .iter()
        .map(|s| SubmersionSpec::from_ast(s, &manifolds))
        .collect::<Result<_, _>>()?;
    Ok(ParsedFile {
        manifolds,
        submersions,
    })
}

/// Pretty-print a spec back to definition-language text.
pub fn dump_manifold(m: &ManifoldSpec) -> String {
    let mut s = format!(
        "manifold {} {{\n  dim {}\n  signature {}\n  coords {}\n",
        m.name,
        m.dim,
        m.signature,
        m.coords.join(" ")
    );
    for (i, p) in m.periodic.iter().enumerate() {
        if let Some(t) = p {
            s.push_str(&format!("  periodic {} {}\n", m.coords[i], t));
        }
    }
    for (i, (lo, hi)) in m.domain.iter().enumerate() {
        if m.periodic[i].is_none() {
            s.push_str(&format!("  domain {} in [{}, {}]\n", m.coords[i], lo, hi));
        }
    }
    s.push_str("  metric {\n");
    for a in 0..m.dim {
        for b in a..m.dim {
            if m.metric[a][b] != Expr::Const(0.0) {
                s.push_str(&format!("    g[{a}][{b}] = {}\n", m.metric[a][b]));
            }
        }
    }
    s.push_str("  }\n}\n");
    s
}

pub fn dump_submersion(sub: &SubmersionSpec) -> String {
    let mut s = String::new();
    s.push_str(&dump_manifold(&sub.total));
    s.push_str(&dump_manifold(&sub.base));
    s.push_str(&format!(
        "submersion {} {{\n  total {};\n  base {};\n  map {{\n",
        sub.name, sub.total.name, sub.base.name
    ));
    for (k, e) in sub.map.iter().enumerate() {
        s.push_str(&format!("    {} = {}\n", sub.base.coords[k], e));
    }
    s.push_str(&format!("  }}\n  aligned {}\n}}\n", sub.coordinate_aligned));
    s
}

/// A compiled chart: metric components plus their exact symbolic first
/// derivatives, ready for evaluation over any scalar.
#[derive(Clone, Debug)]
pub struct Chart {
    pub dim: usize,
    pub metric: Vec<Vec<Expr>>,
    /// `dmetric[c][a][b]` is the expression for the c-derivative of `g_ab`.
    pub dmetric: Vec<Vec<Vec<Expr>>>,
    pub periodic: Vec<Option<f64>>,
    pub domain: Vec<(f64, f64)>,
}

impl Chart {
    fn reduce_val(&self, i: usize, v: f64) -> f64 {
        match self.periodic[i] {
            Some(t) => {
                let lo = self.domain[i].0;
                lo + (v - lo).rem_euclid(t)
            }
            None => v,
        }
    }

    /// Reduce the point part of an `S`-valued point into the chart box.
    pub fn reduce_point<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        x.iter()
            .enumerate()
            .map(|(i, v)| {
                let raw = v.val();
                let red = self.reduce_val(i, raw);
                if red == raw {
                    v.clone()
                } else {
                    // shifting by a constant leaves all derivatives intact
                    v.clone() + v.lit(red - raw)
                }
            })
            .collect()
    }

    /// Lift a plain point to coordinate jets, reduced into the chart box.
    pub fn lift(&self, x: &[f64]) -> Vec<Jet2> {
        let red: Vec<f64> = (0..self.dim).map(|i| self.reduce_val(i, x[i])).collect();
        Jet2::lift_point(&red)
    }

    pub fn metric_at<S: Scalar>(&self, x: &[S]) -> Result<Mat<S>, Error> {
        let x = self.reduce_point(x);
        let mut g = Vec::with_capacity(self.dim);
        for a in 0..self.dim {
            let mut row = Vec::with_capacity(self.dim);
            for b in 0..self.dim {
                row.push(self.metric[a][b].eval(&x)?);
            }
            g.push(row);
        }
        Ok(g)
    }

    pub fn dmetric_at<S: Scalar>(&self, x: &[S]) -> Result<Vec<Mat<S>>, Error> {
        let x = self.reduce_point(x);
        let mut out = Vec::with_capacity(self.dim);
        for c in 0..self.dim {
            let mut mat = Vec::with_capacity(self.dim);
            for a in 0..self.dim {
                let mut row = Vec::with_capacity(self.dim);
                for b in 0..self.dim {
                    row.push(self.dmetric[c][a][b].eval(&x)?);
                }
                mat.push(row);
            }
            out.push(mat);
        }
        Ok(out)
    }

    /// Christoffel symbols `gamma[c][a][b]` from the symbolic derivative route.
    pub fn christoffel_at<S: Scalar>(&self, x: &[S]) -> Result<Vec<Mat<S>>, Error> {
        let g = self.metric_at(x)?;
        let g_inv = linalg::inverse(&g, DET_FLOOR).ok_or_else(|| Error::DegenerateMetric {
            point: x.iter().map(|s| s.val()).collect(),
            det: linalg::det(&g).val(),
        })?;
        let dg = self.dmetric_at(x)?;
        let m = self.dim;
        let mut gamma = vec![vec![vec![x[0].lit(0.0); m]; m]; m];
        for c in 0..m {
            for a in 0..m {
                for b in a..m {
                    let mut acc = x[0].lit(0.0);
                    for d in 0..m {
                        let sym = dg[a][d][b].clone() + dg[b][d][a].clone() - dg[d][a][b].clone();
                        acc = acc + g_inv[c][d].clone() * sym;
                    }
                    let acc = acc.scale(0.5);
                    gamma[c][a][b] = acc.clone();
                    gamma[c][b][a] = acc;
                }
            }
        }
        Ok(gamma)
    }

    /// Signed volume density `sqrt|det g|`.
    pub fn volume_density(&self, x: &[f64]) -> Result<f64, Error> {
        let g = self.metric_at(x)?;
        Ok(linalg::det(&g).abs().sqrt())
    }
}

/// Wrap-aware distance between two points of the same chart.
pub fn chart_distance(chart: &Chart, a: &[f64], b: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..chart.dim {
        let d = (a[i] - b[i]).abs();
        let d = match chart.periodic[i] {
            Some(t) => {
                let r = d.rem_euclid(t);
                r.min(t - r)
            }
            None => d,
        };
        worst = worst.max(d);
    }
    worst
}

/// Serializable summary used by the CLI `list` command.
#[derive(Clone, Debug, Serialize)]
pub struct SubmersionSummary {
    pub name: String,
    pub total_dim: usize,
    pub base_dim: usize,
    pub fibre_dim: usize,
    pub total_index: usize,
    pub base_index: usize,
    pub aligned: bool,
}

impl From<&SubmersionSpec> for SubmersionSummary {
    fn from(s: &SubmersionSpec) -> Self {
        SubmersionSummary {
            name: s.name.clone(),
            total_dim: s.total.dim,
            base_dim: s.base.dim,
            fibre_dim: s.fibre_dim,
            total_index: s.total.signature,
            base_index: s.base.signature,
            aligned: s.coordinate_aligned,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TORUS: &str = "
manifold t2 {
  dim 2 signature 1
  coords th ph
  periodic th 6.283185307179586
  periodic ph 6.283185307179586
  metric { g[0][0] = 1  g[1][1] = -1 }
}
manifold s1 {
  dim 1 signature 0
  coords th
  periodic th 6.283185307179586
  metric { g[0][0] = 1 }
}
submersion flat {
  total t2;
  base s1;
  map { th = th }
}
";

    #[test]
    fn parses_and_validates_flat_torus() {
        let f = parse_specs(TORUS).unwrap();
        assert_eq!(f.manifolds.len(), 2);
        let sub = &f.submersions[0];
        assert_eq!(sub.fibre_dim, 1);
        assert!(sub.coordinate_aligned, "projection map is auto-detected");
        let grid = vec![vec![0.5, 1.0], vec![3.0, 4.0]];
        f.manifolds[0].validate_signature(&grid).unwrap();
    }

    #[test]
    fn symmetry_conflict_is_an_error() {
        let src = "
manifold m { dim 2 signature 0 coords t x domain t in [0,1] domain x in [0,1]
  metric { g[0][1] = t  g[1][0] = 0  g[0][0] = 1  g[1][1] = 1 } }";
        let err = parse_specs(src).unwrap_err();
        assert!(err.message.contains("symmetry conflict at (1,0)"));
    }

    #[test]
    fn map_arity_mismatch_is_an_error() {
        let src = "
manifold a { dim 4 signature 0 coords w x y z domain w in [0,1] domain x in [0,1]
  domain y in [0,1] domain z in [0,1] metric { g[0][0]=1 g[1][1]=1 g[2][2]=1 g[3][3]=1 } }
manifold b { dim 3 signature 0 coords u v s domain u in [0,1] domain v in [0,1]
  domain s in [0,1] metric { g[0][0]=1 g[1][1]=1 g[2][2]=1 } }
submersion p { total a; base b; map { u = w  v = x } }";
        let err = parse_specs(src).unwrap_err();
        assert!(err.message.contains("map arity 2 != base dim 3"));
    }

    #[test]
    fn signature_mismatch_detected() {
        let src = "
manifold m { dim 2 signature 0 coords t x domain t in [0,1] domain x in [0,1]
  metric { g[0][0] = 1  g[1][1] = -1 } }";
        let f = parse_specs(src).unwrap();
        let err = f.manifolds[0]
            .validate_signature(&[vec![0.5, 0.5]])
            .unwrap_err();
        assert!(matches!(err, Error::SignatureMismatch { .. }));
    }

    #[test]
    fn fibre_slice_freezes_leading_coordinates() {
        let src = "
manifold m { dim 2 signature 1 coords th ph periodic th 6.283185307179586
  periodic ph 6.283185307179586
  metric { g[0][0] = 1  g[1][1] = -(2 + cos(th))^2 } }";
        let f = parse_specs(src).unwrap();
        let fibre = f.manifolds[0].fibre_slice(1, &[std::f64::consts::PI, 0.0]);
        assert_eq!(fibre.dim, 1);
        let chart = fibre.chart();
        let g = chart.metric_at(&[0.3]).unwrap();
        assert!((g[0][0] + 1.0).abs() < 1e-12); // -(2 + cos(pi))^2 = -1
    }

    #[test]
    fn dump_round_trips() {
        let f = parse_specs(TORUS).unwrap();
        let text = dump_submersion(&f.submersions[0]);
        let f2 = parse_specs(&text).unwrap();
        assert_eq!(f2.submersions[0].map, f.submersions[0].map);
        assert_eq!(f2.manifolds[0].metric, f.manifolds[0].metric);
    }
}
