use thiserror::Error;

/// Errors produced by model construction, inference, learning and I/O.
#[derive(Debug, Error)]
pub enum SqhnError {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("node {node} has no grown neurons")]
    Untrained { node: usize },

    #[error("node {node} is assigned neuron {index} but only {grown} are grown")]
    Unassigned {
        node: usize,
        index: usize,
        grown: usize,
    },

    #[error("node {node} has no neurons and growth is disabled")]
    GrowthDisabled { node: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SqhnError>;
