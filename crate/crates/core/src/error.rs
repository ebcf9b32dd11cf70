use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed row {row}: {message}")]
    MalformedRow {
        path: PathBuf,
        row: u64,
        message: String,
    },

    #[error("{path}: column `{column}` not found in header (available: {available})")]
    MissingColumn {
        path: PathBuf,
        column: String,
        available: String,
    },

    #[error("{path}: row {row}: empty query text")]
    EmptyText { path: PathBuf, row: u64 },

    #[error("{path}: row {row}: empty intent label in a {split} record")]
    MissingLabel {
        path: PathBuf,
        row: u64,
        split: &'static str,
    },

    #[error("{path}: row {row}: unknown split value `{value}`")]
    UnknownSplit {
        path: PathBuf,
        row: u64,
        value: String,
    },

    #[error("no records selected for split `{0}`")]
    EmptySelection(String),

    #[error("label `{label}` does not occur in the training labels")]
    UnseenLabel { label: String },

    #[error("record `{id}` has no intent label")]
    Unlabeled { id: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("block {block} ({analyzer}) produced no features on the fitting texts")]
    EmptyVocabulary { block: usize, analyzer: String },

    #[error("feature dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("training data has {0} distinct class(es); at least 2 are required")]
    TooFewClasses(usize),

    #[error("class {class} has zero training samples")]
    EmptyClass { class: usize },

    #[error("feature row {row} contains a non-finite value")]
    NonFinite { row: usize },

    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },

    #[error("class id {id} out of range for {classes} classes")]
    ClassOutOfRange { id: usize, classes: usize },

    #[error("solver diverged: {0}")]
    Diverged(String),

    #[error("{path}: line {line}: {message}")]
    EmbeddingFormat {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: duplicate embedding id `{id}`")]
    DuplicateId { path: PathBuf, id: String },

    #[error("{count} record(s) have no embedding, e.g. {first:?}")]
    MissingEmbeddings { count: usize, first: Vec<String> },

    #[error("not a model bundle (bad magic bytes)")]
    BadMagic,

    #[error("unsupported bundle format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("bundle digest mismatch: header says {expected}, payload hashes to {actual}")]
    DigestMismatch { expected: String, actual: String },

    #[error("bundle is truncated: {0}")]
    Truncated(String),

    #[error("bundle payload is inconsistent: {0}")]
    CorruptBundle(String),

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidConfig(_) => ErrorClass::Usage,
            Error::NonFinite { .. } | Error::Diverged(_) => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }
}
