use thiserror::Error;

use crate::bounds::Verdict;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Shapes or lengths of inputs do not agree.
    #[error("structural mismatch: {0}")]
    Structural(String),
    /// The request exceeds a configured or enumerable size.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// A theorem's hypotheses are not satisfied.
    #[error("hypotheses violated for {}: {}", .0.bound, .0.violated().join("; "))]
    Hypotheses(Verdict),
}

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}
