use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for {len} entities")]
    Lookup { index: usize, len: usize },

    #[error("unknown entity id `{0}`")]
    UnknownId(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset is empty after filtering")]
    DatasetEmpty,

    #[error("item `{item}` labelled both `{first}` and `{second}`")]
    LabelConflict {
        item: String,
        first: String,
        second: String,
    },

    #[error("malformed binary container: {0}")]
    Format(String),

    #[error("untrainable input: {0}")]
    Untrainable(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("ill-conditioned system (condition estimate {0:.3e})")]
    IllConditioned(f64),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value in field `{0}`")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable name of the error class, printed by the command line tool.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Lookup { .. } | Error::UnknownId(_) => "lookup",
            Error::Domain(_) => "domain",
            Error::Parse { .. } => "parse",
            Error::DatasetEmpty => "dataset-empty",
            Error::LabelConflict { .. } => "label-conflict",
            Error::Format(_) => "format",
            Error::Untrainable(_) => "untrainable",
            Error::Sampling(_) => "sampling",
            Error::Degenerate(_) => "degenerate",
            Error::InvalidConfig(_) => "invalid-config",
            Error::IllConditioned(_) => "ill-conditioned",
            Error::UndefinedCorrelation(_) => "undefined-correlation",
            Error::EmptyInput(_) => "empty-input",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::NonFinite(_) => "non-finite",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
