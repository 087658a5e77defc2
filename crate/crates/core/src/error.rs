use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A bundle or config file did not conform to its format.
    #[error("{file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An argument lies outside the documented domain of an operation.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// Inputs violate a structural precondition (shapes, symmetry, coverage).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Inputs are well-formed but numerically degenerate (zero rows, zero spectrum).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A computation produced non-finite values.
    #[error("numeric failure at epoch {epoch}: {message}")]
    NonFinite { epoch: usize, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }

    /// Same variant and message; I/O sources are rebuilt from kind and text.
    pub(crate) fn duplicate(&self) -> Self {
        match self {
            Error::Parse { file, line, message } => Error::parse(file, *line, message.clone()),
            Error::Io { path, source } => {
                Error::io(path, std::io::Error::new(source.kind(), source.to_string()))
            }
            Error::Param(m) => Error::Param(m.clone()),
            Error::Contract(m) => Error::Contract(m.clone()),
            Error::Degenerate(m) => Error::Degenerate(m.clone()),
            Error::NonFinite { epoch, message } => Error::NonFinite {
                epoch: *epoch,
                message: message.clone(),
            },
        }
    }

    /// True for failures caused by user-supplied configuration or data.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Param(_) | Error::Contract(_)
        )
    }

    /// True for failures of the numerical pipeline itself.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Degenerate(_) | Error::NonFinite { .. })
    }
}
