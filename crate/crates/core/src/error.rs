use thiserror::Error;

/// Errors raised by the lattice solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A lattice or solver configuration violates one of its invariants.
    #[error("configuration error: {0}")]
    Config(String),

    /// Caller handed mismatched objects to an operation (e.g. dimensions).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A requested value falls outside the admissible window.
    #[error("{quantity} = {value} is out of range: {bound}")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        bound: String,
    },

    /// Malformed operator dump or similar text input.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
