use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coordinate: {0}")]
    InvalidCoordinate(String),

    /// A malformed input row. `line` is 1-based and counts the header.
    #[error("{file}: line {line}, column `{column}`: {message}")]
    Schema {
        file: String,
        line: u64,
        column: String,
        message: String,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate prior: every posterior numerator is zero")]
    DegeneratePrior,

    #[error("insufficient training pool: {found} qualifying users, need at least {required}")]
    InsufficientTraining { found: usize, required: usize },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("crossed cutoffs: dem_max {dem_max} >= rep_min {rep_min}")]
    Calibration { dem_max: f64, rep_min: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(
        file: impl Into<String>,
        line: u64,
        column: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Schema {
            file: file.into(),
            line,
            column: column.into(),
            message: message.into(),
        }
    }
}
