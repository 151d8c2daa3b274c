use thiserror::Error;

/// A violated parameter invariant.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("constraint violation on `{field}`: {reason}")]
pub struct ConstraintViolation {
    pub field: &'static str,
    pub reason: String,
}

/// Errors from the special-function kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("adaptive quadrature did not converge after {subintervals} subintervals (error estimate {error_estimate:e})")]
    ConvergenceFailure {
        subintervals: usize,
        error_estimate: f64,
    },
}

/// Errors from the model asymptotics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Invalid(#[from] ConstraintViolation),
    #[error("asymptotic bias diverges for this model")]
    Divergent,
    #[error("root iterates are unbounded: no finite maximiser of the expected log-likelihood")]
    Diverging,
    #[error("Newton iteration did not converge after {iterations} iterations (last lambda {last:e})")]
    NoConvergence { iterations: usize, last: f64 },
    #[error("{operation} is not available for the {variant} model")]
    Unsupported {
        operation: &'static str,
        variant: &'static str,
    },
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// Errors from the Monte Carlo harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("log-likelihood has no interior maximum on [{lo:e}, {hi:e}]")]
    NoInteriorMaximum { lo: f64, hi: f64 },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
}
