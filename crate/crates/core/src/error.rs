use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt image: {0}")]
    CorruptImage(String),

    #[error("image contains no black pixel")]
    BlankImage,

    #[error("input too short: need at least {min} samples, got {got}")]
    InputTooShort { min: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("orientation undefined: fewer than 2 black pixels")]
    DegenerateCloud,

    #[error("too few samples: need at least {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("training diverged: loss is not finite")]
    NonFiniteLoss,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("model schema violation: {0}")]
    SchemaViolation(String),

    #[error("unsupported model version {found:?} (expected {expected:?})")]
    VersionMismatch { expected: String, found: String },

    #[error("manifest parse error: {0}")]
    ParseError(String),

    #[error("unknown sample kind {0:?}")]
    UnknownKind(String),

    #[error("duplicate path in manifest: {}", .0.display())]
    DuplicatePath(PathBuf),

    #[error("empty category: {0}")]
    EmptyCategory(String),

    #[error("writer {writer}: {source}")]
    Writer {
        writer: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn for_writer(self, writer: &str) -> Self {
        Error::Writer {
            writer: writer.to_string(),
            source: Box::new(self),
        }
    }
}
