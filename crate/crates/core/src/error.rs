use std::path::Path;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{op} did not converge within {max_iterations} iterations on a {rows}x{cols} input")]
    NoConvergence {
        op: &'static str,
        max_iterations: usize,
        rows: usize,
        cols: usize,
    },

    #[error(
        "ill-posed core regression: lambda_min(K^T K) = {lambda_min:e} is below {threshold:e}; \
         increase the number of sampled entries (or d), or pass a positive ridge"
    )]
    IllPosed { lambda_min: f64, threshold: f64 },

    #[error("parse error in {path} at line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Parse { .. } | Error::NoConvergence { .. } => 1,
            Error::IllPosed { .. } => 2,
            Error::Io { .. } => 3,
        }
    }
}
