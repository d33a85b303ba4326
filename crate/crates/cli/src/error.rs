use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::ppm::PpmError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("{path}: {message}")]
    Input { path: String, message: String },

    #[error("{path}: {source}")]
    Ppm { path: String, source: PpmError },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error(transparent)]
    Core(#[from] quickshift_core::Error),
}

impl CliError {
    /// 0 success, 1 usage, 2 input, 3 internal invariant violation.
    pub fn exit_code(&self) -> i32 {
        use quickshift_core::Error as E;
        match self {
            CliError::Usage(_) => 1,
            CliError::Parse { .. } | CliError::Input { .. } | CliError::Ppm { .. } | CliError::Io { .. } => 2,
            CliError::Core(E::Invariant(_)) => 3,
            CliError::Core(E::InvalidParameter { .. } | E::UnknownStrategy(_)) => 1,
            CliError::Core(_) => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
