//! Error type shared by every module in the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Model construction rejected the requested data.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A point, covector, or parameter fails a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Metric data requested on the singular boundary |z| = 1, where the
    /// cylindrical chart components degenerate.
    #[error("metric evaluation on the singular set: {0}")]
    BoundaryEvaluation(String),

    /// A grid and a function (or two grids) do not describe the same nodes.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Resolution too low for the requested computation.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    /// Two spectral objects carry different multiplicity conventions.
    #[error("multiplicity convention mismatch: {left} vs {right}")]
    ConventionMismatch { left: &'static str, right: &'static str },

    /// The adaptive integrator could not keep its tolerance.
    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    /// An eigensolver or linear-algebra kernel failed.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// The spectral range cannot resolve the requested frequency cutoff.
    #[error("frequency resolution: {0}")]
    Resolution(String),
}

pub type Result<T> = std::result::Result<T, Error>;
