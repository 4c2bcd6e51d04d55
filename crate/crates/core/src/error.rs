use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed record at line {line} (doc_id {doc_id}): field `{field}`: {message}")]
    MalformedRecord {
        line: usize,
        doc_id: String,
        field: String,
        message: String,
    },

    #[error("document {doc_id}: unknown object id `{object_id}` referenced in {context}")]
    DanglingReference {
        doc_id: String,
        object_id: String,
        context: &'static str,
    },

    #[error("document {doc_id}: no salience structure (zero relationships)")]
    NoSalienceStructure { doc_id: String },

    #[error("document {doc_id}: {message}")]
    Document { doc_id: String, message: String },

    #[error("invalid token `{token}`: {message}")]
    InvalidToken { token: String, message: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("duplicate token `{0}`")]
    DuplicateToken(String),

    #[error("unknown token `{0}`")]
    UnknownToken(String),

    #[error("divergence: non-finite loss in epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate ranks: zero rank variance")]
    DegenerateRanks,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("silhouette undefined: need at least 2 clusters, found {0}")]
    SilhouetteUndefined(usize),

    #[error("invalid argument `{name}`: {message}")]
    InvalidArgument { name: &'static str, message: String },

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("serialization: {0}")]
    Serialize(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            message: message.into(),
        }
    }
}
