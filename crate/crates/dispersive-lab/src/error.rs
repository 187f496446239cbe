//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by grid construction, operators, scans and time integration.
#[derive(Debug, Clone, Error)]
pub enum LabError {
    /// Input data violates a structural requirement (non-finite samples, grid mismatch).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The operation is undefined on this input (e.g. antiderivative of a
    /// field with nonzero mean).
    #[error("domain error: {0}")]
    Domain(String),

    /// A dyadic frequency lies outside the band resolved by the grid.
    #[error("out of resolved band: {0}")]
    OutOfBand(String),

    /// A resonance or kernel evaluation hit a singular point exactly.
    #[error("singular point: {0}")]
    SingularPoint(String),

    /// Ratio of norms requested for a zero field.
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    /// A quadrature failed its self-consistency (node doubling) check.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    /// Time integration produced a non-finite state; `t_last` is the last
    /// time with a finite state.
    #[error("blow-up detected, last good time t = {t_last}")]
    Blowup { t_last: f64 },
}

pub type LabResult<T> = Result<T, LabError>;
