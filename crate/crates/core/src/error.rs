use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid extent {extent} does not exceed the support radius {support}")]
    GridTooSmall { extent: f64, support: f64 },

    #[error("NoPositiveEigenvalue: top Rayleigh-Ritz value {top:.6e} is below the threshold {threshold:.6e}")]
    NoPositiveEigenvalue { top: f64, threshold: f64 },

    #[error("eigen-solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("ShiftInsideSpectrum: shift {shift} is not above the top eigenvalue")]
    ShiftInsideSpectrum { shift: f64 },

    #[error("VelocityTooFast: |v| = {speed} must be below b = {limit}")]
    VelocityTooFast { speed: f64, limit: f64 },

    #[error("DimensionTooLow: finite-limit probabilities need d >= 3, got d = {0}")]
    DimensionTooLow(usize),

    #[error("moment order {n} out of range 1..={nmax}")]
    MomentOutOfRange { n: usize, nmax: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
