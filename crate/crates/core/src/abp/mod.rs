//! The transport construction on geodesic balls about the pole: scaling
//! normalization, the radial Neumann problem, the set `U`, the contact
//! set `A_r`, the map `Φ_r` and the final Sobolev and isoperimetric audits.
//!
//! `K = B_R(pole)` and `f` is radial, so the Neumann problem reduces to
//! quadrature and every pointwise step of the argument is checked along a
//! radial geodesic.

mod neumann;
mod sobolev;
mod transport;

pub use neumann::{
    normalize_f, scaling_sides, solve_neumann_radial, solve_neumann_radial_with, verify_lemma1,
    Lemma1Report, NeumannSolution, Normalization, ScalingSides, BOUNDARY_TOL, NEUMANN_CELLS,
    RESIDUAL_TOL,
};
pub use sobolev::{
    isoperimetric_check, sobolev_audit, AuditVerdict, ChainLink, Interval, IsoperimetricReport,
    SobolevReport, SOBOLEV_TOL,
};
pub use transport::{
    ar_membership, image_jacobian_fd, inclusion_audit, preimage, transport, transport_with,
    ArCertificate, InclusionEntry, InclusionReport, SampleSpec, TransportAudit, TransportSpec,
    AR_TOL, INCLUSION_TARGETS, JACOBIAN_TOL, JACOBI_STEP,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comparison::ComparisonError;
use crate::geometry::{GeometryError, RotSymSpace};

#[derive(Debug, Error)]
pub enum AbpError {
    #[error("{0}")]
    Domain(String),
    #[error("normalization mismatch: |u'(R) - 1| = {defect:e} exceeds {tolerance:e}")]
    NormalizationMismatch { defect: f64, tolerance: f64 },
    #[error("Lemma-1 inequality fails by {max:e} at s = {at}")]
    Lemma1Violated { max: f64, at: f64 },
    #[error("conjugate point at t = {t} along the transport of the contact point s = {s}")]
    ConjugateAtArPoint { s: f64, t: f64 },
    #[error("volume chain fails at r = {r}: {lhs} > {rhs}")]
    ChainViolation { r: f64, lhs: f64, rhs: f64 },
    #[error(transparent)]
    Comparison(#[from] ComparisonError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Geodesic ball `K = B_R(pole)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallDomain {
    pub radius: f64,
}

impl BallDomain {
    pub fn new(space: &RotSymSpace, radius: f64) -> Result<Self, AbpError> {
        if radius > 0.0 && radius < space.r_max {
            Ok(Self { radius })
        } else {
            Err(AbpError::Domain(format!(
                "ball radius {radius} outside (0, {})",
                space.r_max
            )))
        }
    }
}
