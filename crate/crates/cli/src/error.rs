use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] nctc::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid arguments: {0}")]
    Usage(String),

    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// 2 for an initialization failure, 3 for divergence, 4 for everything
    /// else (I/O, parsing, invalid input).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(nctc::Error::InitFailure { .. }) => 2,
            CliError::Core(nctc::Error::Divergence { .. }) => 3,
            _ => 4,
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

pub(crate) fn csv_err(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Csv { path, source }
}

pub(crate) fn json_err(path: impl Into<PathBuf>) -> impl FnOnce(serde_json::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Json { path, source }
}
