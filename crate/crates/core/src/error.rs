use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet {name:?} is invalid: {reason}")]
    InvalidAlphabet { name: String, reason: String },

    #[error("distribution over {alphabet:?} is invalid: {reason}")]
    InvalidDistribution { alphabet: String, reason: String },

    #[error("joint table is invalid: {0}")]
    InvalidJoint(String),

    #[error("channel is invalid: {0}")]
    InvalidChannel(String),

    #[error("unknown variable {0:?}")]
    UnknownVariable(String),

    #[error("variable sets overlap on {0:?}")]
    OverlappingSets(String),

    #[error("variable set must be nonempty")]
    EmptyVariableSet,

    #[error("alphabet mismatch: expected {expected:?}, got {got:?}")]
    AlphabetMismatch { expected: String, got: String },

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("conditioning event has probability zero: {0}")]
    ZeroProbabilityEvent(String),

    #[error("joint tensor would need {cells} cells, budget is {budget}")]
    SizeOverflow { cells: u128, budget: u64 },

    #[error("degenerate support: {0}")]
    DegenerateSupport(String),

    #[error("world is invalid: {0}")]
    InvalidWorld(String),

    #[error("tuple has length {got}, expected {expected}")]
    TupleLengthMismatch { expected: usize, got: usize },

    #[error("temperature {name} = {value} out of range: {reason}")]
    TemperatureOutOfRange {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("sweep points do not include the base point beta=1, gamma=1")]
    MissingBasePoint,

    #[error("unknown codec {0:?}")]
    UnknownCodec(String),

    #[error("corpus is invalid: {0}")]
    InvalidCorpus(String),
}

pub type Result<T> = std::result::Result<T, Error>;
