use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid gradient batch: {0}")]
    InvalidBatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A rule's worker-count requirement does not hold (e.g. Krum needs m >= q + 3).
    #[error("{rule} requires {requirement} (m = {m}, q = {q})")]
    Precondition {
        rule: &'static str,
        requirement: &'static str,
        m: usize,
        q: usize,
    },

    #[error(transparent)]
    Data(#[from] DataError),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Failures while reading or validating a dataset.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad IDX magic number 0x{found:08x} (expected 0x{expected:08x})")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("{path}: truncated IDX file (needed {needed} bytes, found {found})")]
    Truncated {
        path: PathBuf,
        needed: usize,
        found: usize,
    },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("{path}: row {row} has {found} columns, expected {expected}")]
    Ragged {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: row {row}, column {column}: cannot parse `{cell}` as a number")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: usize,
        cell: String,
    },

    #[error("{path}: row {row}: label `{value}` is not a class index")]
    LabelOutOfRange {
        path: PathBuf,
        row: usize,
        value: String,
    },

    #[error("{path}: label column {column} does not exist ({columns} columns)")]
    NoSuchColumn {
        path: PathBuf,
        column: usize,
        columns: usize,
    },

    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },

    #[error("invalid dataset: {0}")]
    Invalid(String),
}
