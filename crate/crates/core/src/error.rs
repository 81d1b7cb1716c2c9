use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("variable index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("truncation order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("resource guard: {0}")]
    Resource(String),
    #[error("degenerate configuration space: {0}")]
    Degenerate(String),
    #[error("weights unavailable: {0}")]
    WeightsUnavailable(String),
    #[error("grading violation: {0}")]
    Grading(String),
    #[error("not a Maurer-Cartan element: {0}")]
    NotMaurerCartan(String),
    #[error("invalid Lie algebra: {0}")]
    InvalidLieAlgebra(String),
    #[error("nonconvergence: {0}")]
    Nonconvergence(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
