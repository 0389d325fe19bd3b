use thiserror::Error;

/// Errors raised by the library. The CLI maps every variant to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("infeasible pair: {0}")]
    InfeasiblePair(String),

    #[error("budget exceeded: {what} needs {needed} points, cap is {cap}")]
    Budget { what: String, needed: u128, cap: u128 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported closed form: {0}")]
    Unsupported(String),

    #[error("modulus curve is not invertible: {0}")]
    NonInvertible(String),

    #[error("degenerate value: {0}")]
    Degenerate(String),

    #[error("singular noise matrix: {0}")]
    Singular(String),

    #[error("generator rejected: {0}")]
    Rejected(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
