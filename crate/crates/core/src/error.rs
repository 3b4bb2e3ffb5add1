use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("missing required config key `{0}`")]
    MissingKey(String),

    #[error("non-finite derivative at t = {t:.4} s ({what})")]
    NonFinite { t: f64, what: &'static str },

    #[error("trace too short: {0}")]
    TraceTooShort(String),

    #[error("no beat established yet")]
    NoBeat,

    #[error("non-finite input sample at index {0}")]
    NonFiniteSample(usize),

    #[error("cycle count mismatch: {events} detected vs {truth} true cycles")]
    CycleMismatch { events: usize, truth: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("division by zero in {0}")]
    DivisionByZero(&'static str),

    #[error("not enough samples: {0}")]
    NotEnoughSamples(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
