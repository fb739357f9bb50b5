//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Gamma function evaluated at a nonpositive integer.
    #[error("gamma function pole at z = {re} + {im}i")]
    GammaPole { re: f64, im: f64 },

    /// H-function parameter block rejected by validation.
    #[error("invalid H-function spec: {0}")]
    InvalidSpec(String),

    /// Residue series failed to converge within the term budget.
    #[error("residue series not converged after {terms} terms (last |term|/|sum| = {last_ratio:.3e})")]
    NonConvergence { terms: usize, last_ratio: f64 },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failure in {context}: error estimate {estimate:.3e} above tolerance {tolerance:.3e}")]
    QuadratureFailure {
        context: &'static str,
        estimate: f64,
        tolerance: f64,
    },

    /// Contour kind not implemented.
    #[error("unsupported contour: {0}")]
    UnsupportedContour(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Evaluation at a point where the quantity is singular.
    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("insufficient grid: need at least {needed} points, got {got}")]
    InsufficientGrid { needed: usize, got: usize },

    /// Coincident points in a kernel with an off-diagonal singularity.
    #[error("coincident points: {0}")]
    CoincidentPoints(&'static str),

    /// Parameter outside the admissible domain of an operation.
    #[error("parameter domain violation: {0}")]
    DomainViolation(String),

    /// Covariance matrix not positive semidefinite within the jitter budget.
    #[error("covariance not PSD: Cholesky failed at jitter {max_jitter:.3e}")]
    NotPsd { max_jitter: f64 },

    /// Quadrature mode asked for more tensor dimensions than it supports.
    #[error("dimension too large for quadrature: {dims} pair dimensions (max {max}); use MC estimation")]
    DimensionTooLarge { dims: usize, max: usize },

    /// Spatial grid does not cover the effective support of the integrand.
    #[error("grid coverage: {0}")]
    GridCoverage(String),

    /// Envelope fit found no admissible parameters.
    #[error("envelope fit failure: {0}")]
    FitFailure(String),
}
