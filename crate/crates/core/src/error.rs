//! Crate-wide error type.

use thiserror::Error;

use crate::dsl::ast::EvalError;
use crate::dsl::lexer::Diagnostic;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] Diagnostic),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("degenerate metric at {point:?} (det g = {det:e})")]
    DegenerateMetric { point: Vec<f64>, det: f64 },

    #[error("degenerate tangent plane at {point:?} (|g(E,E)g(F,F) - g(E,F)^2| = {denom:e})")]
    DegeneratePlane { point: Vec<f64>, denom: f64 },

    #[error("degenerate vertical metric at {point:?}: |g(v,v)| = {norm:e} after orthogonalization")]
    DegenerateVerticalMetric { point: Vec<f64>, norm: f64 },

    #[error("projection differential rank-deficient at {point:?}")]
    RankDeficient { point: Vec<f64> },

    #[error(
        "manifold `{manifold}` signature mismatch at {point:?}: expected {expected_neg} negative eigenvalues, got {eigenvalues:?}"
    )]
    SignatureMismatch {
        manifold: String,
        point: Vec<f64>,
        expected_neg: usize,
        eigenvalues: Vec<f64>,
    },

    #[error("scalar products not preserved on horizontal vectors at {point:?} (residual {residual:e})")]
    AxiomC { point: Vec<f64>, residual: f64 },

    #[error("geodesic left the chart at step {step}: {coord} = {value} outside [{lo}, {hi}]")]
    ChartExit {
        step: usize,
        coord: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("geodesic step {step} rejected: local error {estimate:e} exceeds {bound:e}")]
    StepRejected {
        step: usize,
        estimate: f64,
        bound: f64,
    },

    #[error("non-timelike {which} (g = {norm2:e}) at parameter {t}")]
    NonTimelike { which: String, norm2: f64, t: f64 },

    #[error("samples not on a common fibre: base images deviate by {deviation:e}")]
    NotOneFibre { deviation: f64 },

    #[error("almost-Hermitian validation failed: {0}")]
    BadHermitianStructure(String),

    #[error("unknown catalog case `{0}`")]
    UnknownCase(String),

    #[error("unknown identity `{0}`")]
    UnknownIdentity(String),

    #[error("unknown integral formula `{0}`")]
    UnknownFormula(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
