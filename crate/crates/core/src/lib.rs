//! Numerical verification toolkit for semi-Riemannian submersions with
//! totally umbilic fibres.
//!
//! Manifolds and submersions are described by chart-based metric expressions
//! in a small definition language. From those definitions the crate computes
//! Levi-Civita connections, curvature tensors, adapted frames and the O'Neill
//! fundamental tensors by second-order forward-mode differentiation, then
//! certifies the classical pointwise identities, integral formulas and the
//! Clairaut girth law as numerical residuals over sample grids.

pub mod catalog;
pub mod dsl;
pub mod error;
pub mod fd;
pub mod geodesic;
pub mod geometry;
pub mod grid;
pub mod identities;
pub mod jet;
pub mod linalg;
pub mod manifold;
pub mod quadrature;
pub mod report;
pub mod submersion;

pub use error::{Error, Result};
