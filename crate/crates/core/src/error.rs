use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("small divisor: |lambda^{n} - 1| = {modulus:e}")]
    SmallDivisor { n: i64, modulus: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),
    #[error("classification error: {0}")]
    Classification(String),
    #[error("effectively resonant rotation: c = {0:e}")]
    Resonant(f64),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
