use std::path::{Path, PathBuf};

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: pullback::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status: 2 config, 3 parse, 4 numeric, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use pullback::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Parse { .. } => 3,
            CliError::Core { source, .. } => match source {
                E::Dimension { .. } | E::Contract(_) | E::Unsupported(_) => 2,
                E::Parse { .. } => 3,
                E::Singular { .. } | E::NonFiniteLoss { .. } | E::InsufficientData { .. } | E::StepUnderflow { .. } => {
                    4
                }
                E::Io(_) => 1,
            },
            CliError::Io { .. } | CliError::Other(_) => 1,
        }
    }
}

/// Attaches experiment context to core errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for pullback::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|source| CliError::Core {
            context: what(),
            source,
        })
    }
}
