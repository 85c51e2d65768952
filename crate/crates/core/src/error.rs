use thiserror::Error;

use crate::generators::GenError;
use crate::inspector::InspectError;
use crate::metrics::MetricsError;
use crate::mps::{EvalError, ModelError, MpsError, WriteError};
use crate::oracle::OracleError;
use crate::schema::SchemaError;

/// Any error raised by the library, with a stable machine-readable code.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Write(#[from] WriteError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error(transparent)]
    Inspect(#[from] InspectError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Mps(e) => e.code(),
            Error::Model(_) => "INVALID_MODEL",
            Error::Write(WriteError::InvalidName(_)) => "INVALID_NAME",
            Error::Write(WriteError::Io(_)) | Error::Io { .. } => "IO",
            Error::Eval(e) => e.code(),
            Error::Oracle(e) => e.code(),
            Error::Schema(e) => e.code(),
            Error::Metrics(e) => e.code(),
            Error::Generator(e) => e.code(),
            Error::Inspect(e) => e.code(),
            Error::Usage(_) => "USAGE",
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Error {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }
}
