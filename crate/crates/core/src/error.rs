//! Crate-wide error type.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure category, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numerical => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty source")]
    EmptySource,

    #[error("record {record}: {message}")]
    Record { record: usize, message: String },

    #[error("record {record}: duplicate id {id:?}")]
    DuplicateId { record: usize, id: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown feature {0:?}")]
    UnknownFeature(String),

    #[error("duplicated feature {0:?}")]
    DuplicateFeature(String),

    #[error("feature name collision: {0:?}")]
    NameCollision(String),

    #[error("schema mismatch: expected {expected:?}, found {found:?}")]
    SchemaMismatch { expected: Vec<String>, found: Vec<String> },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("class {0} has no samples")]
    MissingClass(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("zero variance in {0}")]
    ZeroVariance(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("degenerate centroids")]
    DegenerateCentroids,

    #[error("training set contains a single class")]
    SingleClass,

    #[error("value {value} outside [0, 1] for feature {feature:?}")]
    OutOfRange { feature: String, value: f64 },

    #[error("unknown bundle format version {0}")]
    UnknownVersion(u32),

    #[error("malformed bundle: {0}")]
    MalformedBundle(String),

    #[error("member {member}: {source}")]
    Member {
        member: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage} stage: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn record(record: usize, message: impl Into<String>) -> Self {
        Error::Record { record, message: message.into() }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_)
            | Error::UnknownFeature(_)
            | Error::DuplicateFeature(_)
            | Error::NameCollision(_) => ErrorKind::Usage,
            Error::ZeroVariance(_)
            | Error::NonFinite(_)
            | Error::DegenerateCentroids
            | Error::SingleClass => ErrorKind::Numerical,
            Error::Member { source, .. } | Error::Stage { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}
