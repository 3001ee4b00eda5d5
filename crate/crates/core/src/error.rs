//! Error type shared across the toolkit.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid inputs, schemas, shapes or configuration values.
    #[error("validation error: {0}")]
    Validation(String),

    /// A manifest row that cannot be ingested (bad label, unreadable image).
    #[error("manifest row {row}: {message}")]
    Row { row: usize, message: String },

    /// Non-finite value produced where a finite one is required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Training aborted; the last good checkpoint (if any) is preserved.
    #[error("training failure: {message}")]
    Training {
        message: String,
        last_good_checkpoint: Option<PathBuf>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }

    pub fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }
}
