//! Built-in example geometries covering every hypothesis combination the
//! residual suites exercise: flat and warped semi-Riemannian tori, the Hopf
//! fibration in two charts, constant-curvature warped models and deliberate
//! negative controls.

use crate::dsl::ast::Expr;
use crate::dsl::parser::parse_expr;
use crate::error::{Error, Result};
use crate::manifold::{parse_specs, SubmersionSpec};
use crate::submersion::SubCtx;

/// Hypothesis tags carried by catalog entries. Each tag has a defining
/// residual that entry validation checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tag {
    /// `T_U V = g(U,V) H / r`.
    Umbilic,
    /// `T = 0`.
    TotallyGeodesic,
    /// Warped-product structure: `A = 0` and `H` basic.
    Warped,
    /// Engine curvature matches the constant-curvature model with this `c`.
    ConstantCurvature(f64),
    /// Only the vertical Ricci relation `g(rho^V(H/r), X) = c g(H,X)` holds
    /// with this constant (mixed curvature constant along `H`).
    ConstantMixedCurvature(f64),
    /// Indefinite total metric.
    Lorentz,
    /// Positive-definite total metric.
    Riemannian,
    /// Total chart closes up (periodic box, or boundary of vanishing volume
    /// density): global integral formulas apply.
    Compact,
    /// Same for the base chart.
    CompactBase,
    /// Carries a girth function `w = exp f` with `H/r = -grad f`.
    Clairaut,
    /// Projection onto the leading coordinates; fibre slices are charts.
    Aligned,
    /// `g(H/r, H/r) + c = 0` everywhere (the exceptional girth case).
    Critical,
    /// Deliberately broken hypothesis; gates must skip, not fail.
    Control,
}

/// Expected identity-suite outcome for one (entry, identity) pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expect {
    Pass,
    Skip,
}

pub struct CatalogEntry {
    pub id: &'static str,
    pub dsl: &'static str,
    pub tags: &'static [Tag],
    /// Girth log `f` (total coordinates) with `w = exp f`, `H/r = -grad f`.
    pub girth_log: Option<&'static str>,
    /// Closed form of `c + g(H/r, H/r)` as a base-coordinate expression, used
    /// by the base Laplacian identity check.
    pub f_star: Option<&'static str>,
    /// Right inverse of the projection for non-aligned charts, as one total
    /// coordinate expression per base coordinate.
    pub section: Option<&'static [&'static str]>,
    /// Almost-Hermitian data on the base: (mu, alpha, row-major J components).
    pub j_base: Option<(f64, f64, &'static [&'static str])>,
    /// Regression surface: expected outcome per identity at default
    /// resolution, with a note.
    pub expected: &'static [(&'static str, Expect, &'static str)],
    pub note: &'static str,
}


macro_rules! s1_base {
    ($coord:literal) => {
        concat!(
            "manifold s1_base { dim 1 signature 0 coords ",
            $coord,
            " periodic ",
            $coord,
            " 6.283185307179586 metric { g[0][0] = 1 } }\n"
        )
    };
}

const LORENTZ_FLAT_TORUS: &str = concat!(
    "manifold t2_flat { dim 2 signature 1 coords theta phi
  periodic theta 6.283185307179586
  periodic phi 6.283185307179586
  metric { g[0][0] = 1  g[1][1] = -1 } }\n",
    s1_base!("theta"),
    "submersion lorentz_flat_torus { total t2_flat; base s1_base; map { theta = theta } aligned true }\n"
);

const WARPED_LORENTZ_T2: &str = concat!(
    "manifold t2_warped { dim 2 signature 1 coords theta phi
  periodic theta 6.283185307179586
  periodic phi 6.283185307179586
  metric { g[0][0] = 1  g[1][1] = -(2 + cos(theta))^2 } }\n",
    s1_base!("theta"),
    "submersion warped_lorentz_t2 { total t2_warped; base s1_base; map { theta = theta } aligned true }\n"
);

const WARPED_LORENTZ_T3: &str = concat!(
    "manifold t3_warped { dim 3 signature 2 coords theta phi1 phi2
  periodic theta 6.283185307179586
  periodic phi1 6.283185307179586
  periodic phi2 6.283185307179586
  metric {
    g[0][0] = 1
    g[1][1] = -(2 + cos(theta))^2
    g[2][2] = -(2 + cos(theta))^2
  } }\n",
    s1_base!("theta"),
    "submersion warped_lorentz_t3 { total t3_warped; base s1_base; map { theta = theta } aligned true }\n"
);

const WARPED_SPHERE_FIBRE: &str = concat!(
    "manifold t1xs2 { dim 3 signature 2 coords theta eta phi
  periodic theta 6.283185307179586
  domain eta in [0, 3.141592653589793]
  periodic phi 6.283185307179586
  metric {
    g[0][0] = 1
    g[1][1] = -(2 + cos(theta))^2
    g[2][2] = -(2 + cos(theta))^2 * sin(eta)^2
  } }\n",
    s1_base!("theta"),
    "submersion warped_sphere_fibre { total t1xs2; base s1_base; map { theta = theta } aligned true }\n"
);

const HOPF: &str = "
manifold s3_hopf { dim 3 signature 0 coords eta xi1 xi2
  domain eta in [0, 1.5707963267948966]
  periodic xi1 6.283185307179586
  periodic xi2 6.283185307179586
  metric { g[0][0] = 1  g[1][1] = cos(eta)^2  g[2][2] = sin(eta)^2 } }
manifold s2_base { dim 2 signature 0 coords th ph
  domain th in [0, 3.141592653589793]
  periodic ph 6.283185307179586
  metric { g[0][0] = 1/4  g[1][1] = sin(th)^2/4 } }
submersion hopf { total s3_hopf; base s2_base; map { th = 2*eta  ph = xi2 - xi1 } aligned false }
";

const HOPF_ALIGNED: &str = "
manifold s3_torus { dim 3 signature 0 coords th ph psi
  domain th in [0, 3.141592653589793]
  periodic ph 6.283185307179586
  periodic psi 6.283185307179586
  metric {
    g[0][0] = 1/4
    g[1][1] = 1/4
    g[2][2] = 1/4
    g[1][2] = -cos(th)/4
  } }
manifold s2_base { dim 2 signature 0 coords th ph
  domain th in [0, 3.141592653589793]
  periodic ph 6.283185307179586
  metric { g[0][0] = 1/4  g[1][1] = sin(th)^2/4 } }
submersion hopf_aligned { total s3_torus; base s2_base; map { th = th  ph = ph } aligned true }
";

const CLAIRAUT_COSH: &str = "
manifold cosh_total { dim 3 signature 2 coords t x y
  domain t in [-3, 3]
  periodic x 6.283185307179586
  periodic y 6.283185307179586
  metric { g[0][0] = 1  g[1][1] = -cosh(t)^2  g[2][2] = -cosh(t)^2 } }
manifold cosh_base { dim 1 signature 0 coords t
  domain t in [-3, 3]
  metric { g[0][0] = 1 } }
submersion clairaut_cosh { total cosh_total; base cosh_base; map { t = t } aligned true }
";

const CRITICAL_EXP: &str = "
manifold exp_total { dim 3 signature 2 coords t x y
  domain t in [-1.5, 1.5]
  periodic x 6.283185307179586
  periodic y 6.283185307179586
  metric { g[0][0] = 1  g[1][1] = -exp(2*t)  g[2][2] = -exp(2*t) } }
manifold exp_base { dim 1 signature 0 coords t
  domain t in [-1.5, 1.5]
  metric { g[0][0] = 1 } }
submersion critical_exp { total exp_total; base exp_base; map { t = t } aligned true }
";

const PERTURBED_NONUMBILIC: &str = concat!(
    "manifold t3_perturbed { dim 3 signature 2 coords theta phi1 phi2
  periodic theta 6.283185307179586
  periodic phi1 6.283185307179586
  periodic phi2 6.283185307179586
  metric {
    g[0][0] = 1
    g[1][1] = -(2 + cos(theta))^2
    g[2][2] = -(2 + cos(theta))^2
    g[1][2] = 0.05 * sin(theta) * (2 + cos(theta))^2
  } }\n",
    s1_base!("theta"),
    "submersion perturbed_nonumbilic { total t3_perturbed; base s1_base; map { theta = theta } aligned true }\n"
);

const MIXED_FLAT_AFFINE: &str = "
manifold affine_total { dim 2 signature 1 coords t phi
  domain t in [0, 2]
  periodic phi 6.283185307179586
  metric { g[0][0] = 1  g[1][1] = -(1 + 0.25*t)^2 } }
manifold affine_base { dim 1 signature 0 coords t
  domain t in [0, 2]
  metric { g[0][0] = 1 } }
submersion mixed_flat_affine { total affine_total; base affine_base; map { t = t } aligned true }
";

const S2_J: &[&str] = &["0", "-sin(th)", "1/sin(th)", "0"];

use Expect::{Pass, Skip};

pub static CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        id: "lorentz-flat-torus",
        dsl: LORENTZ_FLAT_TORUS,
        tags: &[
            Tag::TotallyGeodesic,
            Tag::Umbilic,
            Tag::Warped,
            Tag::ConstantCurvature(0.0),
            Tag::Lorentz,
            Tag::Compact,
            Tag::CompactBase,
            Tag::Aligned,
            Tag::Clairaut,
        ],
        girth_log: Some("0"),
        f_star: Some("0"),
        section: None,
        j_base: None,
        expected: &[
            ("gauss_fibre", Skip, "fibre dimension 1: no vertical 2-planes"),
            ("mixed_plane", Pass, "0 = 0"),
            ("horizontal_plane", Skip, "base dimension 1: no horizontal 2-planes"),
            ("killing_fibre", Pass, "flat"),
            ("closed_one_form", Pass, "trivially 0 on a 1-dimensional base"),
            ("ranjan", Pass, "0 = 0 + 0 + 0"),
            ("scalar_split", Pass, "all terms vanish"),
            ("horizontal_scalar", Pass, "all terms vanish"),
            ("ricci_mixed", Pass, "all terms vanish"),
            ("horizontal_curvature", Skip, "base dimension 1: no horizontal 2-planes"),
            ("ricci_vertical", Pass, "flat"),
            ("basicness_transfer", Pass, "H = 0"),
            ("constant_curvature", Pass, "c = 0"),
            ("gcsf_model", Skip, "no almost-Hermitian structure supplied"),
            ("gradient_equation", Pass, "H = 0, c = 0"),
            ("sign_conditions", Pass, "index r with Riemannian base"),
        ],
        note: "flat product; every curvature quantity vanishes",
    },
    CatalogEntry {
        id: "warped-lorentz-t2",
        dsl: WARPED_LORENTZ_T2,
        tags: &[
            Tag::Umbilic,
            Tag::Warped,
            Tag::Lorentz,
            Tag::Compact,
            Tag::CompactBase,
            Tag::Aligned,
            Tag::Clairaut,
        ],
        girth_log: Some("log(2 + cos(theta))"),
        f_star: None,
        section: None,
        j_base: None,
        expected: &[
            ("gauss_fibre", Skip, "fibre dimension 1: no vertical 2-planes"),
            ("mixed_plane", Pass, "warped curvature against the H route"),
            ("horizontal_plane", Skip, "base dimension 1: no horizontal 2-planes"),
            ("killing_fibre", Pass, "A = 0 and H closed"),
            ("closed_one_form", Pass, "H is a gradient lift"),
            ("ranjan", Pass, "pins the H sign convention"),
            ("scalar_split", Pass, "fibre term vanishes for 1-dim fibres"),
            ("horizontal_scalar", Pass, ""),
            ("ricci_mixed", Pass, "A = 0 and H basic"),
            ("horizontal_curvature", Skip, "base dimension 1: no horizontal 2-planes"),
            ("ricci_vertical", Pass, "prefactor 1 - 1/r vanishes at r = 1"),
            ("basicness_transfer", Pass, "warped product: H basic"),
            ("constant_curvature", Skip, "no constant-curvature tag"),
            ("gcsf_model", Skip, "no almost-Hermitian structure supplied"),
            ("gradient_equation", Skip, "vertical Ricci ratio is not constant"),
            ("sign_conditions", Pass, "index r with Riemannian base"),
        ],
        note: "1-dimensional fibres over the circle, f = 2 + cos(theta)",
    },
    CatalogEntry {
        id: "warped-lorentz-t3",
        dsl: WARPED_LORENTZ_T3,
        tags: &[
            Tag::Umbilic,
            Tag::Warped,
            Tag::Lorentz,
            Tag::Compact,
            Tag::CompactBase,
            Tag::Aligned,
            Tag::Clairaut,
        ],
        girth_log: Some("log(2 + cos(theta))"),
        f_star: None,
        section: None,
        j_base: None,
        expected: &[
            ("gauss_fibre", Pass, "flat fibre scaled by f"),
            ("mixed_plane", Pass, ""),
            ("horizontal_plane", Skip, "base dimension 1: no horizontal 2-planes"),
            ("killing_fibre", Pass, "A = 0 and H closed"),
            ("closed_one_form", Pass, "H is a gradient lift"),
            ("ranjan", Pass, ""),
            ("scalar_split", Pass, ""),
            ("horizontal_scalar", Pass, ""),
            ("ricci_mixed", Pass, ""),
            ("horizontal_curvature", Skip, "base dimension 1: no horizontal 2-planes"),
            ("ricci_vertical", Pass, ""),
            ("basicness_transfer", Pass, ""),
            ("constant_curvature", Skip, "no constant-curvature tag"),
            ("gcsf_model", Skip, "no almost-Hermitian structure supplied"),
            ("gradient_equation", Skip, "vertical Ricci ratio is not constant"),
            ("sign_conditions", Pass, "g(H,H) >= 0, g(A,A) <= 0"),
        ],
        note: "index 2 total space over the circle; the standing sign-ledger case",
    },
    CatalogEntry {
        id: "warped-sphere-fibre",
        dsl: WARPED_SPHERE_FIBRE,
        tags: &[
            Tag::Umbilic,
            Tag::Warped,
            Tag::Lorentz,
            Tag::Compact,
            Tag::CompactBase,
            Tag::Aligned,
            Tag::Clairaut,
        ],
        girth_log: Some("log(2 + cos(theta))"),
        f_star: None,
        section: None,
        j_base: None,
        expected: &[
            ("gauss_fibre", Pass, "curved fibre: intrinsic curvature enters"),
            ("mixed_plane", Pass, ""),
            ("horizontal_plane", Skip, "base dimension 1: no horizontal 2-planes"),
            ("killing_fibre", Pass, ""),
            ("closed_one_form", Pass, ""),
            ("ranjan", Pass, ""),
            ("scalar_split", Pass, "nonzero fibre scalar"),
            ("horizontal_scalar", Pass, ""),
            ("ricci_mixed", Pass, ""),
            ("horizontal_curvature", Skip, "base dimension 1: no horizontal 2-planes"),
            ("ricci_vertical", Pass, ""),
            ("basicness_transfer", Pass, ""),
            ("constant_curvature", Skip, "no constant-curvature tag"),
            ("gcsf_model", Skip, "no almost-Hermitian structure supplied"),
            ("gradient_equation", Skip, "vertical Ricci ratio is not constant"),
            ("sign_conditions", Pass, ""),
        ],
        note: "negative-definite round-sphere fibres; exercises intrinsic fibre curvature",
    },
    CatalogEntry {
        id: "hopf",
        dsl: HOPF,
        tags: &[
            Tag::TotallyGeodesic,
            Tag::Umbilic,
            Tag::ConstantCurvature(1.0),
            Tag::Riemannian,
            Tag::Compact,
            Tag::CompactBase,
        ],
        girth_log: None,
        f_star: Some("1"),
        section: Some(&["th/2", "-ph/2", "ph/2"]),
        j_base: Some((4.0, 4.0, S2_J)),
        expected: &[
            ("gauss_fibre", Skip, "fibre dimension 1: no vertical 2-planes"),
            ("mixed_plane", Pass, "reduces to g(A_X U, A_X U)"),
            ("horizontal_plane", Pass, "recovers base curvature 4"),
            ("killing_fibre", Pass, "A_X Y Killing along totally geodesic fibres"),
            ("closed_one_form", Pass, "H = 0"),
            ("ranjan", Pass, "both sides equal 2"),
            ("scalar_split", Skip, "fibre slices need an aligned chart"),
            ("horizontal_scalar", Pass, "s^H - 8 = -2 g(A,A)"),
            ("ricci_mixed", Pass, ""),
            ("horizontal_curvature", Pass, "full four-term formula"),
            ("ricci_vertical", Pass, "rho^V(U) = c(r-1)U check included"),
            ("basicness_transfer", Pass, "H = 0"),
            ("constant_curvature", Pass, "c = 1"),
            ("gcsf_model", Pass, "base 2-sphere with mu = alpha = 4"),
            ("gradient_equation", Pass, "H = 0"),
            ("sign_conditions", Pass, "Riemannian: g(A,A) >= 0, g(H,H) >= 0"),
        ],
        note: "unit 3-sphere over the half-radius 2-sphere in torus coordinates",
    },
    CatalogEntry {
        id: "hopf-aligned",
        dsl: HOPF_ALIGNED,
        tags: &[
            Tag::TotallyGeodesic,
            Tag::Umbilic,
            Tag::ConstantCurvature(1.0),
            Tag::Riemannian,
            Tag::Compact,
            Tag::CompactBase,
            Tag::Aligned,
        ],
        girth_log: None,
        f_star: Some("1"),
        section: None,
        j_base: Some((4.0, 4.0, S2_J)),
        expected: &[
            ("gauss_fibre", Skip, "fibre dimension 1: no vertical 2-planes"),
            ("mixed_plane", Pass, ""),
            ("horizontal_plane", Pass, ""),
            ("killing_fibre", Pass, ""),
            ("closed_one_form", Pass, ""),
            ("ranjan", Pass, ""),
            ("scalar_split", Pass, "6 = 8 + 0 + 0 + 0 - 2"),
            ("horizontal_scalar", Pass, ""),
            ("ricci_mixed", Pass, ""),
            ("horizontal_curvature", Pass, ""),
            ("ricci_vertical", Pass, ""),
            ("basicness_transfer", Pass, ""),
            ("constant_curvature", Pass, "c = 1"),
            ("gcsf_model", Pass, ""),
            ("gradient_equation", Pass, ""),
            ("sign_conditions", Pass, ""),
        ],
        note: "the same fibration in fibre-slice coordinates; total chart is a half-turn quotient, which global integrals tolerate",
    },
    CatalogEntry {
        id: "clairaut-cosh",
        dsl: CLAIRAUT_COSH,
        tags: &[
            Tag::Umbilic,
            Tag::Warped,
            Tag::Lorentz,
            Tag::Aligned,
            Tag::Clairaut,
            Tag::ConstantMixedCurvature(-1.0),
        ],
        girth_log: Some("log(cosh(t))"),
        f_star: Some("(sinh(t)/cosh(t))^2 - 1"),
        section: None,
        j_base: None,
        expected: &[
            ("gauss_fibre", Pass, "flat fibre scaled by cosh"),
            ("mixed_plane", Pass, ""),
            ("horizontal_plane", Skip, "base dimension 1: no horizontal 2-planes"),
            ("killing_fibre", Pass, ""),
            ("closed_one_form", Pass, ""),
            ("ranjan", Pass, ""),
            ("scalar_split", Pass, ""),
            ("horizontal_scalar", Pass, ""),
            ("ricci_mixed", Pass, ""),
            ("horizontal_curvature", Skip, "base dimension 1: no horizontal 2-planes"),
            ("ricci_vertical", Pass, ""),
            ("basicness_transfer", Pass, ""),
            ("constant_curvature", Skip, "no constant-curvature tag"),
            ("gcsf_model", Skip, "no almost-Hermitian structure supplied"),
            ("gradient_equation", Pass, "fitted c = -1 from the vertical Ricci relation"),
            ("sign_conditions", Pass, ""),
        ],
        note: "cosh-warped girth model on a bounded window; mixed curvature is constantly -1 while fibre planes are not",
    },
    CatalogEntry {
        id: "critical-exp",
        dsl: CRITICAL_EXP,
        tags: &[
            Tag::Umbilic,
            Tag::Warped,
            Tag::Lorentz,
            Tag::Aligned,
            Tag::Clairaut,
            Tag::ConstantCurvature(-1.0),
            Tag::Critical,
        ],
        girth_log: Some("t"),
        f_star: Some("0"),
        section: None,
        j_base: None,
        expected: &[
            ("gauss_fibre", Pass, ""),
            ("mixed_plane", Pass, ""),
            ("horizontal_plane", Skip, "base dimension 1: no horizontal 2-planes"),
            ("killing_fibre", Pass, ""),
            ("closed_one_form", Pass, ""),
            ("ranjan", Pass, ""),
            ("scalar_split", Pass, ""),
            ("horizontal_scalar", Pass, ""),
            ("ricci_mixed", Pass, ""),
            ("horizontal_curvature", Skip, "base dimension 1: no horizontal 2-planes"),
            ("ricci_vertical", Pass, "rho^V(U) = c(r-1)U check included"),
            ("basicness_transfer", Pass, ""),
            ("constant_curvature", Pass, "c = -1"),
            ("gcsf_model", Skip, "no almost-Hermitian structure supplied"),
            ("gradient_equation", Pass, "critical: c + g(H/r,H/r) = 0, both sides vanish"),
            ("sign_conditions", Pass, ""),
        ],
        note: "horospherical warp exp(2t): constant curvature -1 and the critical girth case",
    },
    CatalogEntry {
        id: "perturbed-nonumbilic",
        dsl: PERTURBED_NONUMBILIC,
        tags: &[Tag::Lorentz, Tag::Compact, Tag::CompactBase, Tag::Aligned, Tag::Control],
        girth_log: None,
        f_star: None,
        section: None,
        j_base: None,
        expected: &[
            ("gauss_fibre", Skip, "umbilicity gate"),
            ("mixed_plane", Skip, "umbilicity gate"),
            ("horizontal_plane", Skip, "base dimension 1: no horizontal 2-planes"),
            ("killing_fibre", Skip, "umbilicity gate"),
            ("closed_one_form", Skip, "umbilicity gate"),
            ("ranjan", Skip, "umbilicity gate"),
            ("scalar_split", Skip, "umbilicity gate"),
            ("horizontal_scalar", Skip, "umbilicity gate"),
            ("ricci_mixed", Skip, "umbilicity gate"),
            ("horizontal_curvature", Skip, "base dimension 1: no horizontal 2-planes"),
            ("ricci_vertical", Skip, "umbilicity gate"),
            ("basicness_transfer", Skip, "umbilicity gate"),
            ("constant_curvature", Skip, "no constant-curvature tag"),
            ("gcsf_model", Skip, "no almost-Hermitian structure supplied"),
            ("gradient_equation", Skip, "umbilicity gate"),
            ("sign_conditions", Pass, "holds regardless of umbilicity"),
        ],
        note: "negative control: a theta-dependent off-diagonal fibre term breaks umbilicity",
    },
    CatalogEntry {
        id: "mixed-flat-affine",
        dsl: MIXED_FLAT_AFFINE,
        tags: &[
            Tag::Umbilic,
            Tag::Warped,
            Tag::Lorentz,
            Tag::Aligned,
            Tag::Clairaut,
            Tag::ConstantCurvature(0.0),
            Tag::ConstantMixedCurvature(0.0),
        ],
        girth_log: Some("log(1 + 0.25*t)"),
        f_star: Some("(0.25 / (1 + 0.25*t))^2"),
        section: None,
        j_base: None,
        expected: &[
            ("gauss_fibre", Skip, "fibre dimension 1: no vertical 2-planes"),
            ("mixed_plane", Pass, "mixed curvature vanishes"),
            ("horizontal_plane", Skip, "base dimension 1: no horizontal 2-planes"),
            ("killing_fibre", Pass, ""),
            ("closed_one_form", Pass, ""),
            ("ranjan", Pass, ""),
            ("scalar_split", Pass, ""),
            ("horizontal_scalar", Pass, ""),
            ("ricci_mixed", Pass, ""),
            ("horizontal_curvature", Skip, "base dimension 1: no horizontal 2-planes"),
            ("ricci_vertical", Pass, ""),
            ("basicness_transfer", Pass, ""),
            ("constant_curvature", Pass, "flat: c = 0"),
            ("gcsf_model", Skip, "no almost-Hermitian structure supplied"),
            ("gradient_equation", Pass, "fitted c = 0"),
            ("sign_conditions", Pass, ""),
        ],
        note: "flat metric in affine-warp coordinates; the geodesic ODE dh/dt = h^2 applies with nonzero H",
    },
];

/// A loaded, structurally validated catalog case.
pub struct LoadedCase {
    pub entry: &'static CatalogEntry,
    pub ctx: SubCtx,
}

impl LoadedCase {
    pub fn id(&self) -> &'static str {
        self.entry.id
    }

    pub fn has_tag(&self, t: Tag) -> bool {
        self.entry.tags.contains(&t)
    }

    pub fn constant_curvature(&self) -> Option<f64> {
        self.entry.tags.iter().find_map(|t| match t {
            Tag::ConstantCurvature(c) => Some(*c),
            _ => None,
        })
    }

    pub fn constant_mixed_curvature(&self) -> Option<f64> {
        self.entry.tags.iter().find_map(|t| match t {
            Tag::ConstantMixedCurvature(c) => Some(*c),
            _ => None,
        })
    }

    pub fn girth_log(&self) -> Result<Option<Expr>> {
        self.entry
            .girth_log
            .map(|src| parse_expr(src, &self.ctx.spec.total.coords).map_err(Error::from))
            .transpose()
    }

    pub fn f_star(&self) -> Result<Option<Expr>> {
        self.entry
            .f_star
            .map(|src| parse_expr(src, &self.ctx.spec.base.coords).map_err(Error::from))
            .transpose()
    }

    pub fn section(&self) -> Result<Option<Vec<Expr>>> {
        match (self.entry.section, self.ctx.spec.coordinate_aligned) {
            (Some(srcs), _) => {
                let mut out = Vec::with_capacity(srcs.len());
                for s in srcs {
                    out.push(parse_expr(s, &self.ctx.spec.base.coords)?);
                }
                Ok(Some(out))
            }
            (None, true) => {
                // canonical section: leading coordinates are the base point,
                // trailing fibre coordinates pinned at domain midpoints
                let mut out = Vec::with_capacity(self.ctx.m);
                for k in 0..self.ctx.n {
                    out.push(Expr::coord(k, &self.ctx.spec.base.coords[k]));
                }
                for c in self.ctx.n..self.ctx.m {
                    let (lo, hi) = self.ctx.spec.total.domain[c];
                    out.push(Expr::Const(0.5 * (lo + hi)));
                }
                Ok(Some(out))
            }
            (None, false) => Ok(None),
        }
    }

    /// Base almost-Hermitian structure: (mu, alpha, J as an n x n matrix of
    /// expressions over base coordinates).
    pub fn j_base(&self) -> Result<Option<(f64, f64, Vec<Vec<Expr>>)>> {
        match self.entry.j_base {
            None => Ok(None),
            Some((mu, alpha, srcs)) => {
                let n = self.ctx.n;
                if srcs.len() != n * n {
                    return Err(Error::Invalid(format!(
                        "J for `{}` has {} entries, expected {}",
                        self.entry.id,
                        srcs.len(),
                        n * n
                    )));
                }
                let mut rows = Vec::with_capacity(n);
                for a in 0..n {
                    let mut row = Vec::with_capacity(n);
                    for b in 0..n {
                        row.push(parse_expr(srcs[a * n + b], &self.ctx.spec.base.coords)?);
                    }
                    rows.push(row);
                }
                Ok(Some((mu, alpha, rows)))
            }
        }
    }
}

pub fn ids() -> Vec<&'static str> {
    CATALOG.iter().map(|e| e.id).collect()
}

pub fn find(id: &str) -> Result<&'static CatalogEntry> {
    CATALOG
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::UnknownCase(id.to_string()))
}

/// Load a catalog case: parse its definition text and run structural plus
/// signature validation.
pub fn load(id: &str) -> Result<LoadedCase> {
    let entry = find(id)?;
    load_entry(entry)
}

fn load_entry(entry: &'static CatalogEntry) -> Result<LoadedCase> {
    let parsed = parse_specs(entry.dsl)?;
    let sub: &SubmersionSpec = parsed
        .submersions
        .first()
        .ok_or_else(|| Error::Invalid(format!("catalog `{}` has no submersion", entry.id)))?;
    for m in &parsed.manifolds {
        let grid = crate::grid::standard_grid(m);
        m.validate_signature(&grid)?;
    }
    Ok(LoadedCase {
        entry,
        ctx: SubCtx::new(sub.clone()),
    })
}

/// Load a user definition file as a case (no tags, no expectations).
pub fn load_file_source(src: &str, fallback_id: &str) -> Result<(SubCtx, String)> {
    let parsed = parse_specs(src)?;
    let sub = parsed
        .submersions
        .first()
        .ok_or_else(|| Error::Invalid("definition file contains no submersion".into()))?;
    for m in &parsed.manifolds {
        let grid = crate::grid::standard_grid(m);
        m.validate_signature(&grid)?;
    }
    let name = if sub.name.is_empty() {
        fallback_id.to_string()
    } else {
        sub.name.clone()
    };
    Ok((SubCtx::new(sub.clone()), name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submersion::{validate_submersion, SubPoint};

    #[test]
    fn every_entry_parses_validates_and_builds_frames() {
        for entry in CATALOG {
            let case = load(entry.id).unwrap_or_else(|e| panic!("{}: {e}", entry.id));
            let grid = crate::grid::standard_grid(&case.ctx.spec.total);
            validate_submersion(&case.ctx, &grid[..grid.len().min(12)])
                .unwrap_or_else(|e| panic!("{}: {e}", entry.id));
        }
    }

    #[test]
    fn unknown_id_is_reported() {
        assert!(matches!(load("nope"), Err(Error::UnknownCase(_))));
    }

    #[test]
    fn umbilic_tag_matches_residual() {
        for entry in CATALOG {
            let case = load(entry.id).unwrap();
            let grid = crate::grid::standard_grid(&case.ctx.spec.total);
            let mut worst: f64 = 0.0;
            for p in grid.iter().take(12) {
                let sp = SubPoint::compute(&case.ctx, p).unwrap();
                worst = worst.max(sp.umbilicity_residual());
            }
            if case.has_tag(Tag::Umbilic) {
                assert!(worst < 1e-8, "{}: umbilicity residual {worst:e}", entry.id);
            }
            if case.has_tag(Tag::Control) {
                assert!(worst > 1e-3, "{}: control must break umbilicity", entry.id);
            }
        }
    }

    #[test]
    fn totally_geodesic_tag_matches_residual() {
        for entry in CATALOG {
            let case = load(entry.id).unwrap();
            if !case.has_tag(Tag::TotallyGeodesic) {
                continue;
            }
            let grid = crate::grid::standard_grid(&case.ctx.spec.total);
            for p in grid.iter().take(8) {
                let sp = SubPoint::compute(&case.ctx, p).unwrap();
                let (tt, tv) = sp.norm_t2();
                assert!(
                    tt.abs() < 1e-9 && tv.abs() < 1e-9,
                    "{}: g(T,T) = {tt}",
                    entry.id
                );
            }
        }
    }

    #[test]
    fn girth_gate_h_over_r_is_minus_grad_f() {
        for entry in CATALOG {
            let case = load(entry.id).unwrap();
            let Some(f) = case.girth_log().unwrap() else {
                continue;
            };
            let chart = &case.ctx.total;
            let grid = crate::grid::standard_grid(&case.ctx.spec.total);
            for p in grid.iter().take(10) {
                let sp = SubPoint::compute(&case.ctx, p).unwrap();
                let curv = crate::geometry::CurvatureAtPoint::compute(chart, p).unwrap();
                let gradf = curv.gradient(chart, &f).unwrap();
                let h = sp.h_values();
                let r = case.ctx.r as f64;
                let mut worst: f64 = 0.0;
                for c in 0..case.ctx.m {
                    worst = worst.max((h[c] / r + gradf[c]).abs());
                }
                assert!(worst < 1e-9, "{}: |H/r + grad f| = {worst:e}", entry.id);
            }
        }
    }

    #[test]
    fn sections_are_right_inverses() {
        for entry in CATALOG {
            let case = load(entry.id).unwrap();
            let Some(section) = case.section().unwrap() else {
                continue;
            };
            let grid = crate::grid::standard_grid(&case.ctx.spec.base);
            for b in grid.iter().take(8) {
                let total: Vec<f64> =
                    section.iter().map(|e| e.eval(b).unwrap()).collect();
                let back = case.ctx.base_point(&total).unwrap();
                let d = crate::manifold::chart_distance(&case.ctx.base, b, &back);
                assert!(d < 1e-12, "{}: section round-trip off by {d:e}", entry.id);
            }
        }
    }
}
