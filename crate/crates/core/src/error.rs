use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid ensemble shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("correlation coefficient {coeff} outside [0, 1)")]
    InvalidCoefficient { coeff: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("exponent {q} is below 1")]
    ExponentBelowOne { q: f64 },

    #[error("eigensolver did not converge at index {index} after {iterations} iterations (max |entry| {max_abs:e})")]
    EigenNoConvergence {
        index: usize,
        iterations: usize,
        max_abs: f64,
    },

    #[error("resolvent iteration did not converge: residual {residual:e} after {iterations} iterations")]
    ResolventNoConvergence { residual: f64, iterations: usize },

    #[error("negative radicand {radicand:e}: linear response breakdown")]
    NegativeRadicand { radicand: f64 },

    #[error("ansatz density evaluated at its pole r = {r}")]
    AnsatzPole { r: f64 },

    #[error("singular or indefinite matrix (pivot {pivot:e} at row {row}, condition estimate {condition:e})")]
    Singular {
        row: usize,
        pivot: f64,
        condition: f64,
    },

    #[error("row {row} has zero sample variance")]
    ZeroVariance { row: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}
