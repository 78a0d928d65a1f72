use thiserror::Error;

/// Errors raised by measure construction, solvers and verifiers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("convex order precondition violated: {0}")]
    Order(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("instance too large: {0}")]
    Size(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("composition mismatch: {0}")]
    Composition(String),

    #[error("coupling structure violated: {0}")]
    Structure(String),

    #[error("invalid coupling: {0}")]
    Coupling(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("stability hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
