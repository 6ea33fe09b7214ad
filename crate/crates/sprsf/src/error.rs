use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Solver(#[from] sprsf_core::Error),

    #[error("invalid experiment: {0}")]
    Spec(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed file: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for bad parameter values, as opposed to IO or format failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Solver(sprsf_core::Error::InvalidParameter { .. }) | Error::Spec(_)
        )
    }

    pub fn is_input(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Format { .. } | Error::Config { .. })
    }
}
