use thiserror::Error;

/// Failure modes shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a precondition (bad radius, negative density, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A requested size exceeds the configured enumeration or truncation caps.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// A particle configuration violates the hard-core constraints.
    #[error("inadmissible configuration: {0}")]
    InadmissibleConfiguration(String),

    /// A deterministic quadrature could not reach the requested tolerance.
    #[error("precision failure: {0}")]
    PrecisionFailure(String),

    /// A series was requested outside its checked convergence domain.
    #[error("not in convergence domain: {0}")]
    NotInDomain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn limit(msg: impl Into<String>) -> Self {
        Error::ResourceLimit(msg.into())
    }
}
