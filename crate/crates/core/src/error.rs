use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("width {width} must be exactly twice the height {height}")]
    AspectRatio { width: usize, height: usize },

    #[error("eccentricity {0} outside [0, 1)")]
    Eccentricity(f64),

    #[error("object index {index} out of range for {count} objects")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid layout document: {0}")]
    Layout(String),

    #[error("invalid kernel: {0}")]
    Kernel(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("malformed PLT1 data: {0}")]
    Plt(String),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
