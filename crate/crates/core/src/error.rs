use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty candidate set: {0}")]
    EmptyCandidateSet(String),

    #[error("candidate set has {size} members, above the limit of {limit}")]
    CandidateSetTooLarge { size: u128, limit: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("autocorrelation matrix is singular or not positive definite")]
    SingularAutocorrelation,

    #[error("odd number of bits ({0}) cannot be mapped to QPSK")]
    OddBitCount(usize),

    #[error("unknown scheme label `{0}`")]
    UnknownScheme(String),
}
