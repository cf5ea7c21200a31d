use std::path::PathBuf;

use thiserror::Error;
use zerosum_core::{AnalyticError, DynamicsError, MatrixError, PopulationError, SpectralError};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ExitCode {
    Success = 0,
    Parse = 2,
    Validation = 3,
    Numerical = 4,
    Io = 5,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Parse { .. } | CliError::Usage(_) => ExitCode::Parse,
            CliError::Validation(_) => ExitCode::Validation,
            CliError::Numerical(_) => ExitCode::Numerical,
            CliError::Io { .. } => ExitCode::Io,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<MatrixError> for CliError {
    fn from(e: MatrixError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<PopulationError> for CliError {
    fn from(e: PopulationError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::SingularMatrix(_) => CliError::Numerical(e.to_string()),
            DynamicsError::Matrix(m) => m.into(),
            DynamicsError::Population(p) => p.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        match e {
            AnalyticError::Dynamics(d) => d.into(),
            AnalyticError::DegenerateParams(_) => CliError::Numerical(e.to_string()),
            AnalyticError::BadInitial(_) => CliError::Validation(e.to_string()),
        }
    }
}
