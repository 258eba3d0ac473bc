use thiserror::Error;

/// Errors raised by the hp-FEM library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HpError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid polynomial degree {0}: degree must be at least 1")]
    InvalidDegree(usize),

    #[error("index {index} out of range (valid: {valid})")]
    IndexOutOfRange { index: usize, valid: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("linear solver failed: pivot {pivot:e} below threshold (condition estimate {condition_estimate:e})")]
    SolverFailure {
        pivot: f64,
        condition_estimate: f64,
    },

    #[error("solver failed in adaptive iteration {iteration}: {source}")]
    IterationFailure {
        iteration: usize,
        #[source]
        source: Box<HpError>,
    },

    #[error("problem has no exact solution")]
    MissingExactSolution,

    #[error("efficiency index undefined: true error {0:e} is (numerically) zero")]
    UndefinedEfficiency(f64),

    #[error("not enough data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, HpError>;
