use thiserror::Error;

/// Errors raised across the simulation lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid montage: {0}")]
    InvalidMontage(String),
    #[error("undefined test: {0}")]
    UndefinedTest(String),
    #[error("analysis error: {0}")]
    Analysis(String),
    #[error("parse error in {source_name} at line {line}, {field}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        field: String,
        message: String,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_arg(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid_arg(format!("{name} must be finite, got {value}")))
    }
}
