use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("installation width {got} does not match package count {expected}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("known dependencies contain a cycle through package {0}")]
    CyclicDependencies(usize),

    #[error("package id {0} out of range for n = {1}")]
    PackageOutOfRange(usize, usize),

    #[error("self-dependency on package {0}")]
    SelfDependency(usize),

    #[error("conflict pair ({0}, {0}) has identical endpoints")]
    SelfConflict(usize),

    #[error("duplicate pair ({0}, {1})")]
    DuplicatePair(usize, usize),

    #[error("dependency ({0}, {1}) points at root defect {1} (strict model)")]
    DependencyOnDefect(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("oracle feedback inconsistent with stated bounds: {0}")]
    InconsistentInstance(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn guard(msg: impl Into<String>) -> Self {
        Error::GuardExceeded(msg.into())
    }
}
