use thiserror::Error;

use dosesim_core::Error as CoreError;
use dosesim_ml::MlError;
use dosesim_radiomics::RadiomicsError;

/// Command failure, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Param(_) | CoreError::Geometry(_) => CliError::Config(msg),
            CoreError::Numerical(_) => CliError::Numerical(msg),
            _ => CliError::Data(msg),
        }
    }
}

impl From<RadiomicsError> for CliError {
    fn from(e: RadiomicsError) -> Self {
        match e {
            RadiomicsError::Core(c) => c.into(),
            RadiomicsError::Param(m) => CliError::Config(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<MlError> for CliError {
    fn from(e: MlError) -> Self {
        let msg = e.to_string();
        match e {
            MlError::Param(_) => CliError::Config(msg),
            MlError::NoConvergence(_) | MlError::Numerical(_) => CliError::Numerical(msg),
            _ => CliError::Data(msg),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
