//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("derivative order {0} unsupported (maximum is 4)")]
    UnsupportedOrder(usize),

    #[error("jet of order {got} is insufficient, need order {need}")]
    InsufficientJetOrder { need: usize, got: usize },

    #[error("non-finite value encountered at point index {point}: {context}")]
    NonFinite { point: usize, context: String },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("boundary pair mismatch: {0}")]
    UnmatchedPair(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("reference solver diverged: {0}")]
    BlowUp(String),

    #[error("query outside the space-time hull: {0}")]
    OutOfHull(String),

    #[error("line search failed: {0}")]
    LineSearchFailed(String),

    #[error("file format error in {path}: {message}")]
    Format { path: String, message: String },

    #[error("artifact mismatch: {0}")]
    ArtifactMismatch(String),

    #[error("missing prerequisite: {0}")]
    MissingPrerequisite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
