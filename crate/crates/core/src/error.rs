use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the range an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("convergence error: {0}")]
    Convergence(String),

    /// No anchoring point could be located for an item.
    #[error("anchoring error: {0}")]
    Anchoring(String),

    /// A configured size cap (grid points, DP states, enumeration size) was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
