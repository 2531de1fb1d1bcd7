use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, DeconvError>;

#[derive(Debug, Error)]
pub enum DeconvError {
    /// Invalid or inconsistent configuration. `key` is the dotted key path
    /// (or a component name) the problem was found at.
    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    /// A quadrature or iterative routine did not reach its tolerance.
    #[error("numerical tolerance not reached: {0}")]
    Numerical(String),

    /// A quantity left the representable (or well-defined) range.
    #[error("range error: {0}")]
    Range(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl DeconvError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        DeconvError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DeconvError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            DeconvError::Config { .. } | DeconvError::Unsupported(_) => 2,
            DeconvError::Numerical(_) | DeconvError::Range(_) => 3,
            DeconvError::Io { .. } | DeconvError::Parse { .. } => 4,
        }
    }
}
