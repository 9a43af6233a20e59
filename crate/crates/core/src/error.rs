use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty window")]
    EmptyWindow,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unbounded relative set (quantile {0} >= 1)")]
    UnboundedRelativeSet(f64),

    #[error("degenerate loss window (sum of squared losses is zero)")]
    DegenerateLossWindow,

    #[error("hypotheses violated: {0}")]
    HypothesesViolated(String),

    #[error("α* is not the α-quantile: P(β < α*) = {observed}, expected {expected}")]
    NotAQuantile { observed: f64, expected: f64 },

    #[error("undefined relative score (lagged value equals outcome)")]
    UndefinedRelativeScore,

    #[error("non-finite weight in expert ensemble")]
    NonFiniteWeight,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("stream too short: need at least {required} rows, got {got}")]
    StreamTooShort { required: usize, got: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
