use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is outside its admissible range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A task or arm index is outside the sequence.
    #[error("index out of range: {what} {index} (limit {limit})")]
    Index {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    /// An index or width was requested for an arm with no samples.
    #[error("index undefined for arm {arm}: no samples")]
    UndefinedIndex { arm: usize },

    /// A confidence width was requested with a zero sample count.
    #[error("confidence width undefined for zero sample count")]
    UndefinedWidth,

    /// The policy was asked for an arm after the task ran out of steps.
    #[error("task {task} exhausted after {length} steps")]
    SequenceExhausted { task: usize, length: u64 },

    /// Estimator history does not cover the requested tasks.
    #[error("history covers {available} tasks, {required} required")]
    IncompleteHistory { available: usize, required: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
