//! Numerical laboratory for weighted Sobolev and isoperimetric inequalities
//! on rotationally symmetric manifolds with density.
//!
//! A model space is `[0, r_max) × S^{m-1}` with metric `dr² + φ(r)² g_S`
//! and a radial density `w`. The crate certifies the sign of the
//! Bakry–Émery tensor, runs the Jacobi/Riccati comparison machinery, and
//! audits every step of the transport proof of the Sobolev inequality on
//! geodesic balls about the pole.

pub mod abp;
pub mod comparison;
pub mod curvature;
pub mod geometry;
pub mod jet;
pub mod ode;
pub mod quadrature;

pub use abp::{AbpError, BallDomain, NeumannSolution, TransportAudit};
pub use comparison::{ComparisonError, ComparisonSeries, JacobiState, Violation};
pub use curvature::{CdReport, GridSpec, Verdict};
pub use geometry::{GeometryError, RadialProfile, RotSymSpace, SlicePoint};
pub use quadrature::QuadratureError;

use thiserror::Error;

/// Any failure of the library, for callers that do not care which stage
/// produced it.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Comparison(#[from] ComparisonError),
    #[error(transparent)]
    Abp(#[from] AbpError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}
