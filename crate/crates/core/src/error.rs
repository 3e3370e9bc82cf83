use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    /// A data row does not have as many cells as the header.
    #[error("row {row}: expected {expected} cells, found {found}")]
    Arity {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column `{column}`: cannot parse {value:?} as {kind}")]
    Parse {
        row: usize,
        column: String,
        value: String,
        kind: &'static str,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("success rate undefined: no attacks were generated")]
    UndefinedRate,

    #[error("control fully compromised: control success rate is 1, risk is undefined")]
    ControlCompromised,

    #[error("insufficient rows: {0}")]
    Insufficient(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
