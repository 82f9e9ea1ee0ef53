use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// `ln` or a real power of a series whose constant term is not positive
    /// (or, over a general ring, not exactly one).
    #[error("series constant term must be {expected}, got {got}")]
    SeriesConstant { expected: &'static str, got: String },
    /// `V'` is not strictly positive where an `R` mapping needs it.
    #[error("V'({rho}) = {dv} is not strictly positive")]
    NonPositiveDerivative { rho: f64, dv: f64 },
    /// The operation is not defined for this model convention.
    #[error("operation not supported for model {0}")]
    UnsupportedModel(String),
    /// A finite-N integral has a divergent tail.
    #[error("integral not convergent; potential unbounded below")]
    Divergent,
    /// Multicritical potential passed where a Gaussian saddle is required.
    #[error("saddle of order {order} is not Gaussian; large-N correction invalid")]
    NonGaussianSaddle { order: usize },
    /// No unique saddle was found where one is required.
    #[error("expected a unique saddle point, found {0}")]
    SaddleCount(usize),
    /// An iterative solver did not converge.
    #[error("solver failure: {0}")]
    Solver(String),
    /// The RG flow produced a non-positive `R`.
    #[error("flow left positivity domain at tau = {tau}, rho = {rho}")]
    Positivity { tau: f64, rho: f64 },
    /// Malformed textual input.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
