use alloc::string::String;

/// Errors produced by the precoding pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A configuration value violates its invariant.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// An argument lies outside the domain of a model formula.
    #[error("domain error: {0}")]
    Domain(String),
    /// Inputs with inconsistent shapes were combined.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// An iterative solver produced a non-finite value or diverged.
    #[error("solver failure in {stage}: {reason}")]
    SolverFailure { stage: &'static str, reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn domain_err(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn dim_err(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}
