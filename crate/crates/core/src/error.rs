use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("not enough samples for class {class}: need {needed}, have {available}")]
    Shortage {
        class: String,
        needed: usize,
        available: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("no collocated object for sentence {sentence_id}")]
    Mapping { sentence_id: String },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported format version {found} (this build reads major version {supported})")]
    Version { found: String, supported: u32 },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Csv(e) if e.is_io_error() => 3,
            Error::Json(e) if e.is_io() => 3,
            _ => 2,
        }
    }
}
