//! Jacobi/Riccati comparison along radial geodesics and the volume
//! comparison series built from it.

mod bounds;
mod identities;
mod index_form;
mod jacobi;
mod series;

pub use bounds::{
    avr_estimate, bishop_gromov, mean_curvature_comparison, volume_expansion_series,
    weighted_trace_bound, AvrEstimate, BallOrSphere, MeanCurvatureAudit, AVR_LEVELS,
    AVR_SETTLE_TOL, BOUND_TOL, MONOTONE_REL_TOL,
};
pub use identities::{completed_square_split, tan_trace_split, trace_split};
pub use index_form::{index_form_check, IndexFormReport, Taper, ZFamily, ZField};
pub use jacobi::{
    conjugate_scan, jacobi_integrate, jacobi_propagate, riccati_check, JacobiState,
    RiccatiReport,
};
pub use series::{ComparisonSeries, SeriesKind, Violation};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::quadrature::QuadratureError;

#[derive(Debug, Error)]
pub enum ComparisonError {
    #[error("conjugate point at t = {t}")]
    ConjugatePoint { t: f64, states: Box<Vec<JacobiState>> },
    #[error("integrator residual {residual:e} exceeds tolerance {tolerance:e}")]
    IntegratorStep { residual: f64, tolerance: f64 },
    #[error("{label}: violation of magnitude {magnitude:e} at t = {t} (sample {index})")]
    Violation {
        label: String,
        index: usize,
        t: f64,
        magnitude: f64,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl From<QuadratureError> for ComparisonError {
    fn from(e: QuadratureError) -> Self {
        ComparisonError::Geometry(e.into())
    }
}
