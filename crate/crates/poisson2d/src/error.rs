use thiserror::Error;

/// Errors produced by mesh construction, assembly and the linear solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported quadrature degree {0}; supported range is 1..=10")]
    UnsupportedDegree(u32),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("degenerate problem: no free degrees of freedom after boundary elimination")]
    DegenerateProblem,

    #[error("unknown problem '{name}'; available: {available}")]
    UnknownProblem { name: String, available: String },

    #[error("solver failed to converge: {iterations} iterations, relative residual {residual:e}")]
    SolverDidNotConverge { iterations: usize, residual: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
