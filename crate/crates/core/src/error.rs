use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("interpolation failed: {0}")]
    Interpolation(String),
    #[error("series error: {0}")]
    Series(String),
    #[error("table required; missing records: {}", .0.join("; "))]
    TableRequired(Vec<String>),
    #[error("missing socle constant h_{0}")]
    MissingConstant(u32),
    #[error("invalid table: {}", .0.join("; "))]
    InvalidTable(Vec<String>),
    #[error("outside the trusted chamber: {0}")]
    OutsideChamber(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
