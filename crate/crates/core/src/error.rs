use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("MPS parse error on line {line}: {message}")]
    Mps { line: usize, message: String },

    #[error("numerical breakdown at iteration {iteration}: {message}")]
    NumericalBreakdown { iteration: usize, message: String },

    #[error("AAᵀ is not positive definite (pivot {pivot} = {value:e}); use the λ-proximal path instead")]
    RankDeficient { pivot: usize, value: f64 },

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
