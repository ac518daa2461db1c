//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        context: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("label {label} at index {index} out of range (num_classes = {num_classes})")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        num_classes: usize,
    },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("bad IDX magic in {path}: expected {expected:#010x}, found {found:#010x}")]
    IdxBadMagic {
        path: String,
        expected: u32,
        found: u32,
    },

    #[error("truncated IDX payload in {path}: expected {expected} bytes, found {found}")]
    IdxTruncated {
        path: String,
        expected: usize,
        found: usize,
    },

    #[error("IDX image/label count mismatch: {images} images vs {labels} labels")]
    IdxCountMismatch { images: usize, labels: usize },

    #[error("insufficient samples for label {label}: need {needed}, source has {available}")]
    InsufficientSamples {
        label: usize,
        needed: usize,
        available: usize,
    },

    #[error("non-finite loss at local step {step} (batch loss = {loss})")]
    NonFiniteLoss { step: usize, loss: f64 },

    #[error("inconsistent algorithm config: {0}")]
    InconsistentConfig(String),

    #[error("round {round} aborted: {source}")]
    AtRound {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("bad frame magic: {found:02x?}")]
    WireBadMagic { found: [u8; 8] },

    #[error("frame length {len} exceeds the {max} byte limit")]
    WireOversize { len: usize, max: usize },

    #[error("unknown message tag {tag:#04x}")]
    WireUnknownTag { tag: u8 },

    #[error("frame payload length mismatch: declared {declared}, found {found}")]
    WireLengthMismatch { declared: usize, found: usize },

    #[error("protocol violation: {0}")]
    WireProtocol(String),

    #[error("only {connected} of {expected} clients connected before the timeout")]
    WireAcceptTimeout { connected: usize, expected: usize },

    #[error("io error{}: {source}", path.as_ref().map(|p| format!(" on {p}")).unwrap_or_default())]
    Io {
        path: Option<String>,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(source: std::io::Error) -> Self {
        Error::Io { path: None, source }
    }

    pub(crate) fn io_at(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: Some(path.into()),
            source,
        }
    }

    /// Round index attached by the experiment loop, if any.
    pub fn round(&self) -> Option<usize> {
        match self {
            Error::AtRound { round, .. } => Some(*round),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(source: std::io::Error) -> Self {
        Error::io(source)
    }
}
