use thiserror::Error;

/// Errors surfaced by the decomposition, law, and inference machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error(
        "cannot decompose a single multivariate Gaussian (n = 1, p > 1) with unknown covariance \
         into independent folds; only dependent decompositions are available in this setting"
    )]
    SingleObservationIndependent,

    #[error("optimizer failed: {0}")]
    Optimization(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
