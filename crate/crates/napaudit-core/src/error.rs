use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch { expected: Vec<usize>, actual: Vec<usize> },
    #[error("example {example_id}: {message}")]
    Schema { example_id: u64, message: String },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("group is empty")]
    EmptyGroup,
    #[error("all groups are empty")]
    AllGroupsEmpty,
    #[error("example index {index} out of range for {len} examples")]
    Index { index: usize, len: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("activation source: {0}")]
    Source(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
