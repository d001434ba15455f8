use std::path::PathBuf;

use driftlab_core::LabError;
use thiserror::Error;

/// Exit status for a successful run.
pub const EXIT_OK: u8 = 0;
/// Exit status for I/O failures.
pub const EXIT_IO: u8 = 1;
/// Exit status for malformed or invalid configurations.
pub const EXIT_VALIDATION: u8 = 2;
/// Exit status for numeric failures during a run.
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("validation error: {precondition} violated ({hypothesis})")]
    Validation { precondition: String, hypothesis: String },

    #[error(transparent)]
    Lab(#[from] LabError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
}

impl CliError {
    pub fn validation(precondition: impl Into<String>, hypothesis: impl Into<String>) -> Self {
        CliError::Validation { precondition: precondition.into(), hypothesis: hypothesis.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } | CliError::Manifest { .. } => EXIT_VALIDATION,
            CliError::Io { .. } => EXIT_IO,
            CliError::Lab(e) => match e {
                LabError::NumericOverflow(_) | LabError::SingularPoint(_) => EXIT_NUMERIC,
                LabError::DimensionMismatch { .. }
                | LabError::QuadratureBudgetExceeded { .. }
                | LabError::DeltaAtOrAboveCritical { .. }
                | LabError::UnsupportedDimension { .. }
                | LabError::UnsupportedN(_)
                | LabError::ConfigInvalid(_) => EXIT_VALIDATION,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
