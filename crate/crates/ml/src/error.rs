use thiserror::Error;

#[derive(Debug, Error)]
pub enum MlError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("only one class present: {0}")]
    SingleClass(String),
    #[error("optimizer did not converge: {0}")]
    NoConvergence(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MlError>;
