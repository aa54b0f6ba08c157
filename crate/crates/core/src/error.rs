use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{what} failed to converge (matrix norm {norm:e})")]
    NoConvergence { what: &'static str, norm: f64 },
    #[error("numerical consistency: {0}")]
    Consistency(String),
    #[error("resource limit: {0}")]
    Resource(String),
}
