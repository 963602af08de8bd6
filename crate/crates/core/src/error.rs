use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state space too large: {sites} sites exceed the enumeration limit of {limit}")]
    StateSpaceTooLarge { sites: usize, limit: usize },

    #[error("configuration has no particle to choose")]
    EmptyConfiguration,

    /// The chain has more than one closed communicating class, so its
    /// stationary distribution is not unique. Classes are listed by state index.
    #[error("chain is reducible: {} closed classes", .closed_classes.len())]
    ReducibleChain { closed_classes: Vec<Vec<usize>> },

    #[error("linear solve failed: {0}")]
    SolveFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
