use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input at a known line (1-based).
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    /// Wraps an error with the file it came from.
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("frame {frame} missing in {side} stream")]
    FrameMismatch { frame: u64, side: &'static str },

    #[error("ball position disagrees between home and away streams at frame {frame}")]
    BallMismatch { frame: u64 },

    #[error("no position")]
    NoPosition,

    #[error("path is empty")]
    EmptyPath,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unknown event type `{0}`")]
    UnknownEventType(String),

    #[error("duplicate object id `{0}`")]
    DuplicateObject(String),

    #[error("event `{event}` relates to unknown object `{object}`")]
    UnknownObject { event: String, object: String },

    /// OCEL document does not match the expected structure.
    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unknown attribute `{attribute}` for object type `{object_type}`")]
    UnknownAttribute {
        object_type: String,
        attribute: String,
    },

    #[error("unknown possession `{0}`")]
    UnknownPossession(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A generated artifact broke one of its structural guarantees.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn parse(line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }

    pub fn is_invariant_violation(&self) -> bool {
        match self {
            Error::Invariant(_) => true,
            Error::InFile { source, .. } => source.is_invariant_violation(),
            _ => false,
        }
    }
}
