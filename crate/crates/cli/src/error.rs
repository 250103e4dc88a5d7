use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Bad configuration; `field` is the dotted path into the document.
    #[error("{}: field `{field}`: {message}", path.display())]
    Config {
        path: PathBuf,
        field: String,
        message: String,
    },

    #[error("{}:{line}: {message}", path.display())]
    Matrix {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] qsplit_core::Error),

    #[error("invariant `{name}` violated at t = {time}: {value:e} exceeds {tolerance:e}")]
    Invariant {
        name: String,
        time: f64,
        value: f64,
        tolerance: f64,
    },

    #[error("{failed} of {total} normative checks disagreed")]
    Verification { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(path: impl Into<PathBuf>, field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            field: field.into(),
            message: message.into(),
        }
    }

    /// 2 for violated invariants (including numerical failures during a
    /// trajectory), 1 for everything the user can fix in the input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invariant { .. } | CliError::Verification { .. } => 2,
            CliError::Core(qsplit_core::Error::AtTime { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
