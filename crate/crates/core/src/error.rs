use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{routine} did not converge (residual {residual:e})")]
    NoConvergence { routine: &'static str, residual: f64 },

    #[error("weight matrix not positive definite (lambda_min = {lambda_min:e})")]
    NotPositiveDefinite { lambda_min: f64 },

    #[error("ill-conditioned pencil (lambda_min = {lambda_min:e})")]
    IllConditioned { lambda_min: f64 },

    #[error("Legendre truncation failed for mode {n}: tail {tail:e}")]
    Truncation { n: usize, tail: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
