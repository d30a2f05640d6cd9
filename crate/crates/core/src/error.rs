use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error classes, used by the CLI to choose an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Runtime,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {op} got {left} and {right}")]
    Shape {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: parse error at byte offset {offset}: {msg}")]
    ParseOffset {
        path: PathBuf,
        offset: u64,
        msg: String,
    },

    #[error("{path}: parse error at line {line}: {msg}")]
    ParseLine {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: row {row}: {msg}")]
    Row {
        path: PathBuf,
        row: usize,
        msg: String,
    },

    #[error("{0}: dataset contains no usable samples")]
    EmptyDataset(PathBuf),

    #[error("unmapped label {label:?} for scheme {scheme}")]
    UnmappedLabel { label: String, scheme: String },

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("checkpoint vocabulary fingerprint {found:016x} does not match {expected:016x}")]
    Fingerprint { found: u64, expected: u64 },

    #[error("checkpoint truncated: {0}")]
    Truncated(String),

    #[error("checkpoint corrupt: {0}")]
    Corrupt(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn shape(op: &'static str, left: impl ToString, right: impl ToString) -> Self {
        Error::Shape {
            op,
            left: left.to_string(),
            right: right.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::ParseOffset { .. }
            | Error::ParseLine { .. }
            | Error::Row { .. }
            | Error::EmptyDataset(_)
            | Error::UnmappedLabel { .. }
            | Error::CheckpointVersion { .. }
            | Error::Fingerprint { .. }
            | Error::Truncated(_)
            | Error::Corrupt(_)
            | Error::Io { .. } => ErrorKind::Data,
            Error::Shape { .. } | Error::Contract(_) => ErrorKind::Runtime,
            Error::Fold { source, .. } => source.kind(),
        }
    }
}
