use std::path::PathBuf;

use covsel_core::{AnalysisError, DetectorError, GridError, SetCoverError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0} already exists; pass --force to overwrite")]
    Exists(PathBuf),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    SetCover(#[from] SetCoverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("stage `{stage}` failed: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, message: message.into() }
    }

    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage { stage: stage.into(), source: Box::new(other) },
        }
    }

    /// Process exit code: 2 for invalid input, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Json { .. } | Error::Exists(_) | Error::Config(_) | Error::Grid(_) => 2,
            Error::Io { .. } => 3,
            Error::Detector(e) => match e {
                DetectorError::Singular(_) => 3,
                _ => 2,
            },
            Error::SetCover(_) => 2,
            Error::Analysis(e) => match e {
                AnalysisError::InvalidConfig(_) | AnalysisError::UnknownMode(_) => 2,
                _ => 3,
            },
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}
