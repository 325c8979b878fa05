use alloc::string::String;

/// Errors produced anywhere in the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("timestamp {got} is older than the newest stored timestamp {newest}")]
    Ordering { got: u64, newest: u64 },

    #[error("index {index} out of bounds for length {len}")]
    OutOfBounds { index: usize, len: usize },

    #[error("time {now} precedes stored timestamp {timestamp}")]
    Precondition { now: u64, timestamp: u64 },

    #[error("cannot sample from an empty buffer")]
    EmptyBuffer,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("bucket index is stale: {pushes} pushes since rebuild, budget {budget}")]
    Stale { pushes: u64, budget: u64 },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Violated(String),

    #[error("non-finite loss at update {update}")]
    NonFinite { update: u64 },
}

pub type Result<T> = core::result::Result<T, Error>;
