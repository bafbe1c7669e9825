use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument {x} lies outside [-1, 1]")]
    Domain { x: f64 },

    #[error("Newton iteration for Gauss node {index} of {n} did not converge")]
    QuadratureNotConverged { n: usize, index: usize },

    #[error("field mean {mean:e} is not zero (L2 norm {norm:e})")]
    MeanNotZero { mean: f64, norm: f64 },

    #[error("step system is singular: {0}")]
    SingularSystem(String),

    #[error("linear solve residual {residual:e} exceeds tolerance")]
    SolveFailed { residual: f64 },

    #[error("non-finite or blown-up solution (max |coeff| = {max_abs:e})")]
    NonFinite { max_abs: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
