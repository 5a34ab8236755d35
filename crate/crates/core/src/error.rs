use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Malformed token outside of a file context (e.g. a weight literal).
    #[error("syntax error: {0}")]
    Syntax(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// The input is not shaped like the thing it claims to describe
    /// (wrong length, bin index out of range).
    #[error("structural error: {0}")]
    Structure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A configured size guard was exceeded.
    #[error("resource guard exceeded: {0}")]
    Resource(String),

    #[error("advice decode error: {0}")]
    Decode(String),

    /// An online algorithm or its advice broke the one-item-at-a-time contract.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("simulation failure: {0}")]
    Simulation(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
