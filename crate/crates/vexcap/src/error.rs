use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid exponent spec: {0}")]
    InvalidExponent(String),
    #[error("invalid weight spec: {0}")]
    InvalidWeight(String),
    #[error("fields or masks live on different grids")]
    GridMismatch,
    #[error("empty region: {0}")]
    EmptyRegion(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid condenser: {0}")]
    InvalidCondenser(String),
    #[error("solver did not converge within {iterations} iterations (best value {best})")]
    NonConvergence { iterations: usize, best: f64 },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("degenerate instance: {0}")]
    Degenerate(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed container: {0}")]
    Container(String),
}

pub type Result<T> = std::result::Result<T, Error>;
