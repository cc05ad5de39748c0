use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter dimension mismatch: expected {expected}, got {got}")]
    ParamDim { expected: usize, got: usize },

    #[error("parameter index {index} out of range for dimension {dim}")]
    ParamIndex { index: usize, dim: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular to working precision at s = {s}, mu = {mu:?}")]
    Singular { s: Complex64, mu: Vec<f64> },

    #[error("parse error at byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    #[error("result would have {entries} entries, exceeding the cap of {cap}")]
    SizeCap { entries: u128, cap: usize },

    #[error("unsupported derivative order {0}")]
    UnsupportedOrder(usize),

    #[error("invalid interpolation data: {0}")]
    InvalidSpec(String),

    #[error("operation requires a single-input single-output system (m = {m}, p = {p})")]
    NotSiso { m: usize, p: usize },

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
