//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the geometric, enumerative, and numerical routines.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    /// Two objects that must live in the same model dimension do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch {
        /// Dimension of the first operand.
        expected: usize,
        /// Dimension of the offending operand.
        got: usize,
    },

    /// A scalar or structural argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A matrix fails the unit-determinant requirement.
    #[error("matrix determinant is off unity by {error:.3e} (tolerance {tolerance:.1e})")]
    NonUnitDeterminant {
        /// Distance |det − 1|.
        error: f64,
        /// Tolerance that was applied.
        tolerance: f64,
    },

    /// A group presentation file could not be read or validated.
    #[error("group file error: {0}")]
    GroupFile(String),

    /// Breadth-first orbit enumeration exceeded the state cap.
    #[error("orbit frontier exceeded the cap of {cap} states at radius {radius}")]
    FrontierCap {
        /// Configured maximum number of states.
        cap: usize,
        /// Enumeration radius that triggered the blow-up.
        radius: f64,
    },

    /// An operation requiring a certified-complete orbit got a lower bound.
    #[error("orbit enumeration is not certified complete for group `{group}`: {reason}")]
    IncompleteEnumeration {
        /// Group name.
        group: String,
        /// Why completeness could not be certified.
        reason: String,
    },

    /// Adaptive quadrature stalled above the requested tolerance.
    #[error("quadrature error estimate {estimate:.3e} exceeds the requested {requested:.3e}")]
    QuadratureNonConvergence {
        /// Achieved error estimate.
        estimate: f64,
        /// Requested tolerance.
        requested: f64,
    },

    /// The adaptive ODE integrator failed.
    #[error("ODE integration failed: {0}")]
    OdeFailure(String),

    /// No truncation radius satisfying the requested tail bound was found.
    #[error("certified tail {requested:.3e} unreachable: {reason}")]
    TailUnreachable {
        /// Requested tail size.
        requested: f64,
        /// Diagnostic.
        reason: String,
    },

    /// Not enough samples for a statistical estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A quantity that must be real carries too large an imaginary part.
    #[error("imaginary residual {residual:.3e} exceeds the bound {bound:.3e}")]
    ImaginaryResidual {
        /// Magnitude of the imaginary part.
        residual: f64,
        /// Allowed bound.
        bound: f64,
    },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    /// CSV serialization failure.
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
