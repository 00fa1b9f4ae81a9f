use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index {index} out of range for axis of length {len}")]
    Index { index: usize, len: usize },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid config: {0}")]
    Config(String),

    /// The inverse transform left a large imaginary part, which only happens
    /// when the spectrum was not Hermitian-symmetric (bad mask or corrupted data).
    #[error("inverse transform imaginary residue {residue:e} exceeds {threshold:e}")]
    SymmetryViolation { residue: f64, threshold: f64 },

    #[error("statistic undefined: {0}")]
    UndefinedStatistic(String),

    #[error("sampling window not feasible: {0}")]
    Sampling(String),

    #[error("bad tensor file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("image error for {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("io error for {path}: {source}")]
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
}
