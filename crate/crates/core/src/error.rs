use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the selection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// `row` is the 1-based data row (header excluded), `line` the 1-based
    /// physical line in the file.
    #[error("parse error at row {row} (line {line}): {message}")]
    Parse {
        row: usize,
        line: u64,
        message: String,
    },

    #[error("label error at row {row}: {message}")]
    Label { row: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("label vectors differ at row {row}")]
    Alignment { row: usize },

    #[error("feature index {index} out of range for {count} features")]
    Index { index: usize, count: usize },

    #[error("top-K set of feature {feature} is empty; entropy is undefined")]
    UndefinedEntropy { feature: usize },

    #[error("no eligible feature to select from")]
    EmptyCandidates,

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Stable code used as the prefix of CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "E_IO",
            Error::Parse { .. } => "E_PARSE",
            Error::Label { .. } => "E_LABEL",
            Error::Schema(_) => "E_SCHEMA",
            Error::Alignment { .. } => "E_ALIGN",
            Error::Index { .. } => "E_INDEX",
            Error::UndefinedEntropy { .. } => "E_ENTROPY",
            Error::EmptyCandidates => "E_EMPTY",
            Error::Numeric(_) => "E_NUMERIC",
            Error::Degenerate(_) => "E_DEGENERATE",
            Error::Contract(_) => "E_CONTRACT",
            Error::Config(_) => "E_CONFIG",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
