use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const IO: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const BUDGET: i32 = 3;
    pub const DIVERGENCE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {field}: {message}")]
    Validation { field: String, message: String },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] linrep::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use linrep::Error as E;
        match self {
            CliError::Validation { .. } | CliError::Parse(_) => exit::VALIDATION,
            CliError::Core(e) => match e {
                E::Budget { .. } => exit::BUDGET,
                E::Divergence(_) | E::Caustic(_) => exit::DIVERGENCE,
                E::Internal(_) => exit::IO,
                _ => exit::VALIDATION,
            },
            CliError::Io { .. } | CliError::Serialize(_) => exit::IO,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
