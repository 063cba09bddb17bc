//! Error type shared across the crate.
//!
//! Every fallible operation returns [`Result`]. Variants are coarse by
//! design: callers dispatch on the kind of failure (bad shapes, bad config,
//! impossible targets, ...) and the message carries the specifics.

use alloc::string::String;

/// Errors produced by tensor kernels, encoders, losses, decoders, and data
/// utilities.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Tensor shapes do not line up for the requested operation.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A configuration value is out of range or inconsistent.
    #[error("invalid config: {0}")]
    Config(String),

    /// A label sequence cannot be emitted in the given number of frames
    /// (too few frames for the target once required blanks are counted).
    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),

    /// Text contains a character outside the vocabulary, or a token id is
    /// out of range.
    #[error("vocabulary error: {0}")]
    Vocab(String),

    /// Structured text (annotated transcript, manifest line, ...) failed to
    /// parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// Input data is degenerate for the requested operation (empty signal,
    /// all-zero power, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An exhaustive search was requested over a space too large to
    /// enumerate.
    #[error("search space too large: {0}")]
    SearchSpace(String),
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    /// Shorthand for a [`Error::Shape`] with a formatted message.
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// Shorthand for a [`Error::Config`] with a formatted message.
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
