use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{solver} did not converge after {iters} iterations (residual {residual:e})")]
    NonConvergence {
        solver: &'static str,
        iters: usize,
        residual: f64,
    },

    #[error("initialization failed: pruning kept {found} of {needed} factors")]
    InitFailure { found: usize, needed: usize },

    #[error("gradient descent diverged at iteration {iter}")]
    Divergence { iter: usize },

    #[error("factor column {0} is zero")]
    ZeroColumn(usize),

    #[error("ground-truth tensor is identically zero")]
    ZeroTensor,

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
