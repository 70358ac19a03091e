use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("value {value} at index {index} is outside [0, 1]")]
    Range { index: usize, value: f64 },
    #[error("box {bbox} is outside the {width}x{height} extent")]
    Bounds { bbox: String, width: usize, height: usize },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    Dimensions { expected: (usize, usize), actual: (usize, usize) },
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("image decode error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
