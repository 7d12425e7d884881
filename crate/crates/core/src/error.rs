use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (limit {limit})")]
    Index { what: &'static str, index: usize, limit: usize },

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("utility mode mismatch: {0}")]
    Mode(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn index(what: &'static str, index: usize, limit: usize) -> Self {
        Error::Index { what, index, limit }
    }
}
