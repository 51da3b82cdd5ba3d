use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("could not parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("solver failed: {0}")]
    Solver(#[from] qnsplit::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl BenchError {
    /// 2 for anything the user can fix in the configuration, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Validation(_) | BenchError::Parse { .. } => 2,
            BenchError::Solver(
                qnsplit::Error::InvalidConfig(_)
                | qnsplit::Error::InvalidProblem(_)
                | qnsplit::Error::DimensionMismatch { .. },
            ) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }
}
