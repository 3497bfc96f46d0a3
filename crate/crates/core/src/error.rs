use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {message}")]
    Parse { field: &'static str, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("cannot classify ICD-10 code {0:?}")]
    Classification(String),

    #[error("perturbation error: {0}")]
    Perturbation(String),

    #[error("degenerate scenario: {0}")]
    DegenerateScenario(String),

    #[error("absorptivity undefined at every timestep ({0} skipped)")]
    UndefinedAggregate(usize),

    #[error("sample too small: need at least 2 observations, got {0}")]
    SampleTooSmall(usize),

    #[error("missing coordinates for regions: {}", .0.join(", "))]
    MissingCoordinates(Vec<String>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn parse(field: &'static str, message: impl Into<String>) -> Self {
        Error::Parse {
            field,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
