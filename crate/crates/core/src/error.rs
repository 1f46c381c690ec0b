use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the core volume, projection, degradation and metric routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header in {path}: {msg}")]
    Header { path: PathBuf, msg: String },
    #[error("malformed payload in {path}: expected {expected} bytes, found {found}")]
    Payload {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("wrong intensity unit: expected {expected:?}, found {found:?}")]
    Unit {
        expected: crate::volume::IntensityUnit,
        found: crate::volume::IntensityUnit,
    },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn header(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Header {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
