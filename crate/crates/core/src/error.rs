use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidShape(String),

    #[error("index out of range: {name}={value} (limit {limit})")]
    IndexOutOfRange {
        name: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("pattern `{kind}` requires `{field}`")]
    MissingWindow {
        kind: &'static str,
        field: &'static str,
    },

    #[error("unknown pattern kind `{0}`")]
    UnknownPattern(String),

    #[error("mask of {tokens} tokens exceeds the materialization cap of {cap} tokens ({bytes} bytes needed)")]
    MaterializationCap { tokens: usize, cap: usize, bytes: u128 },

    #[error("block size must be at least 1")]
    InvalidBlockSize,

    #[error("block grid of {rows}x{rows} exceeds the image limit of {limit}")]
    ImageTooLarge { rows: usize, limit: usize },

    #[error("malformed mask file: field `{field}`: {reason}")]
    Format { field: &'static str, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("query row {row} keeps no keys")]
    FullyMaskedRow { row: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("pattern `{0}` has no tunable window")]
    NotTunable(&'static str),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("row {row}: {reason}")]
    BadSample { row: usize, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn format(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            field,
            reason: reason.into(),
        }
    }
}
