use thiserror::Error;

/// Errors raised by the field, norm, Bessel, particle and Hardy routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("point lies on the singular set of the field ({0})")]
    SingularPoint(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("quadrature budget exceeded: {needed} nodes requested, budget is {budget}")]
    QuadratureBudgetExceeded { needed: usize, budget: usize },

    #[error("form-bound delta = {delta} is not below the critical value 4")]
    DeltaAtOrAboveCritical { delta: f64 },

    #[error("unsupported squared Bessel dimension mu = {mu}: {reason}")]
    UnsupportedDimension { mu: f64, reason: &'static str },

    #[error("variational estimator supports N in {{2, 3}}, got N = {0}")]
    UnsupportedN(usize),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("numeric overflow in {0}")]
    NumericOverflow(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(LabError::DimensionMismatch { expected, got })
    }
}
