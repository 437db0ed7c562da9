use std::path::PathBuf;

/// Errors of the file and command layer.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A domain-level validation failure.
    #[error(transparent)]
    Core(#[from] bmcurve_core::Error),
    /// A file could not be opened, read or written.
    #[error("{}: {source}", path.display())]
    Io {
        /// File involved.
        path: PathBuf,
        /// Underlying failure.
        #[source]
        source: std::io::Error,
    },
    /// A file was readable but malformed.
    #[error("{}: {message}", path.display())]
    Parse {
        /// File involved.
        path: PathBuf,
        /// What went wrong.
        message: String,
    },
    /// Bad flags or flag combinations.
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    /// Process exit code: 3 for IO failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

/// Result alias for this crate.
pub type Result<T, E = CliError> = std::result::Result<T, E>;
