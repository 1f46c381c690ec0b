use thiserror::Error;

#[derive(Debug, Error)]
pub enum RadiomicsError {
    #[error("ROI mask is empty")]
    EmptyMask,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("feature table: {0}")]
    Table(String),
    #[error(transparent)]
    Core(#[from] dosesim_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = RadiomicsError> = std::result::Result<T, E>;
