//! Command-line frontend and on-disk formats for the transcription
//! pipeline: dataset synthesis, training, decoding, evaluation.

pub mod commands;
pub mod config;
pub mod formats;

use std::fmt;

/// A failed command, carrying the process exit code contract:
/// 2 for configuration errors, 3 for data/format errors, 4 for
/// shape/compatibility errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Config(String),
    Data(String),
    Shape(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        CliError::Shape(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Shape(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Shape(m) => write!(f, "shape error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<canta_core::Error> for CliError {
    fn from(e: canta_core::Error) -> Self {
        use canta_core::Error as E;
        match e {
            E::Config(m) | E::SearchSpace(m) => CliError::Config(m.to_string()),
            E::Shape(m) => CliError::Shape(m.to_string()),
            E::Parse(m) | E::Vocab(m) | E::Degenerate(m) | E::InfeasibleTarget(m) => {
                CliError::Data(m.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(format!("i/o: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
