use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate vector: zero norm")]
    DegenerateVector,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("empty text at batch index {0}")]
    EmptyText(usize),

    #[error("invalid agent card: {0}")]
    InvalidCard(String),

    #[error("duplicate agent id: {0}")]
    DuplicateId(String),

    #[error("index build failed: {0}")]
    Build(String),

    #[error("not ready: {0}")]
    NotReady(String),

    #[error("provider error after {attempts} attempt(s): {message}")]
    Provider { attempts: u32, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
