use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("insufficient candidates: {available} available, {required} required")]
    InsufficientCandidates { available: usize, required: usize },

    #[error("training failed at pixel ({u}, {v}): {source}")]
    Training {
        u: u32,
        v: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("cannot decode {}: {reason}", path.display())]
    Decode { path: PathBuf, reason: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("sequence gap: frame {index} is missing ({})", path.display())]
    SequenceGap { index: usize, path: PathBuf },

    #[error("incompatible model: {0}")]
    IncompatibleModel(String),

    #[error("empty evaluation: no pixel was scored")]
    EmptyEvaluation,

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn decode(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Decode {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for failures caused by numerical conditions rather than bad data.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Training { source, .. } => source.is_numeric(),
            Error::Numeric(_) => true,
            _ => false,
        }
    }
}
