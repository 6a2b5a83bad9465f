use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{n} bits exceeds the exact-analysis limit of {max} bits")]
    TooWide { n: u32, max: u32 },

    #[error("width mismatch: expected {expected} bits, got {got}")]
    WidthMismatch { expected: u32, got: u32 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid bit string: {0}")]
    InvalidBitString(String),

    #[error("inconsistent conditioning: prefix {0} has zero mass")]
    InconsistentConditioning(String),

    #[error("input length {len} is not a multiple of the block length {block_len}")]
    BlockLength { len: usize, block_len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("target set is empty")]
    EmptySet,

    #[error("instance too large for exact evaluation: {0}")]
    TooLarge(String),

    #[error("malformed file: {0}")]
    Format(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
