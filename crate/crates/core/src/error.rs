use thiserror::Error;

/// Errors produced by the library.
///
/// Variants are grouped by how a caller is expected to react: bad numeric
/// input, exhausted enumeration capacity, or unparseable documents.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid count: x = {x} exceeds n = {n}")]
    InvalidCount { x: u64, n: u64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("token index {index} outside vocabulary of size {size}")]
    TokenOutOfRange { index: usize, size: usize },

    #[error("duplicate token {0} in token set")]
    DuplicateToken(usize),

    #[error("point is not on the probability simplex: {0}")]
    InvalidPoint(String),

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error(
        "{count} compositions exceed the enumeration cap of {cap}; use the Monte Carlo approximation"
    )]
    Capacity { count: u128, cap: u64 },

    #[error("density is zero (or negative) at every evaluated grid point")]
    DegenerateDensity,

    #[error("density returned an invalid value {value} at grid point {point:?}")]
    InvalidDensityValue { value: f64, point: Vec<f64> },

    #[error("cross-entropy is infinite: q[{index}] = 0 where p[{index}] > 0")]
    InfiniteCrossEntropy { index: usize },

    #[error("missing correspondence for covered token '{token}' in pair {pair}")]
    IncompleteCorrespondence { token: String, pair: usize },

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed document: {0}")]
    Document(String),

    #[error("empty input: {0}")]
    Empty(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
