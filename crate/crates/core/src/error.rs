use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violated a precondition.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("schema mismatch in {path}: expected `{expected}`, found `{found}`")]
    Schema {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{path}:{line}: {message}")]
    Row {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dataset invalid: {0}")]
    Dataset(#[from] crate::domain::DatasetError),

    #[error("generation failed for {station} on {date}: no sunrise/sunset (polar day or night)")]
    PolarDate { station: String, date: chrono::NaiveDate },

    #[error("instant {0} is outside the climate source coverage")]
    Coverage(chrono::DateTime<chrono::Utc>),

    #[error("config error: {0}")]
    Config(String),

    #[error("drift level {minutes} min: {source}")]
    AtLevel {
        minutes: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input or configuration (CLI exit code 2).
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Input(_)
            | Error::Schema { .. }
            | Error::Row { .. }
            | Error::Dataset(_)
            | Error::Config(_)
            | Error::PolarDate { .. } => true,
            Error::AtLevel { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}
