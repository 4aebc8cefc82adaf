//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("arm index {arm} out of range for {num_arms} arms")]
    ArmIndex { arm: usize, num_arms: usize },

    #[error("subset violates the action-size constraint: {0}")]
    Subset(String),

    #[error("estimate vector has length {got}, expected {expected}")]
    Shape { got: usize, expected: usize },

    #[error("problem too large to enumerate: {0}")]
    Capability(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("infeasible collusion solution: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
