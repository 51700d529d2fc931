use thiserror::Error;

/// Errors raised by the solvers and diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnlifError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("grid mismatch: expected {expected} cells, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("CFL violation: dt = {dt:e} exceeds limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("negative density {min:e} at cell {cell}, t = {t}")]
    NegativeDensity { min: f64, cell: usize, t: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}

impl NnlifError {
    /// True for errors caused by bad input rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            NnlifError::InvalidParameter(_)
                | NnlifError::Validation(_)
                | NnlifError::GridMismatch { .. }
                | NnlifError::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, NnlifError>;

pub(crate) fn invalid(msg: impl Into<String>) -> NnlifError {
    NnlifError::InvalidParameter(msg.into())
}

pub(crate) fn numeric(msg: impl Into<String>) -> NnlifError {
    NnlifError::Numeric(msg.into())
}
