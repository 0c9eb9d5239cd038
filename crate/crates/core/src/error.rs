use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("unsupported degree: {0}")]
    Degree(String),
    #[error("coefficient not representable: {0}")]
    NotRepresentable(String),
    #[error("the fiber over infinity has no affine parameterisation; use INFINITY_FIBER")]
    InfinityFiber,
    #[error("singular matrix")]
    SingularMatrix,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("group closure not reached by word length {0}")]
    NoClosure(usize),
    #[error("trace failure: {0}")]
    Trace(String),
    #[error("topology: {0}")]
    Topology(String),
    #[error("coincident points")]
    Coincident,
}

pub type Result<T> = std::result::Result<T, Error>;
