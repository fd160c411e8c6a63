use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("test function is missing its {0} evaluator")]
    MissingDerivative(&'static str),

    #[error("force kind does not admit a closed-form stationary density: {0}")]
    NotApplicable(String),

    #[error("grid too coarse: relative flux variation {variation:.3e} exceeds {tolerance:.1e}")]
    GridTooCoarse { variation: f64, tolerance: f64 },

    #[error("integrator diverged at step {step}")]
    Diverged { step: usize },

    #[error("noise path exhausted after {available} increments")]
    NoiseExhausted { available: usize },

    #[error("misaligned bins: {0}")]
    Misaligned(String),

    #[error("sample sizes differ: {left} vs {right}")]
    UnequalSizes { left: usize, right: usize },

    #[error("measure space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("sinkhorn did not converge within {iterations} iterations (marginal error {error:.3e})")]
    NoConvergence { iterations: usize, error: f64 },

    #[error("matrix is not symmetric positive (semi)definite: {0}")]
    NotPositiveDefinite(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LabError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LabError::InvalidArgument(msg.into())
    }
}
