use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or layouts that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    /// An argument outside the domain of the operation (non-positive step, bad metric, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity exceeded: {what} needs {needed} entries, cap is {cap}")]
    Capacity {
        what: String,
        needed: usize,
        cap: usize,
    },

    /// A preconditioner or decomposition that would divide by zero.
    #[error("degenerate design: {0}")]
    Degenerate(String),

    #[error("divergence at iteration {iteration} in {variable}")]
    Divergence { iteration: usize, variable: String },

    #[error("pseudo-oracle failure: {0}")]
    OracleFailure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
