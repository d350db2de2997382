use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter vector must be non-empty")]
    EmptyParams,
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-positive variance {value} at index {index}")]
    NonPositiveVariance { index: usize, value: f64 },
    #[error("Fisher covariance requires per-example gradients")]
    MissingFisherData,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("brute-force oracle supports p <= {max}, got p = {p}")]
    DimensionTooLarge { p: usize, max: usize },
    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("adaptive integrator step underflow at t = {t}")]
    IntegratorFailure { t: f64 },
    #[error("exact Hessian unavailable for p = {p}")]
    HessianUnavailable { p: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
