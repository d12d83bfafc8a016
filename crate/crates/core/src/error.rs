use thiserror::Error;

/// Errors raised by the solvers and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time step {dt} violates the stability bound: {reason}")]
    StepTooLarge { dt: f64, reason: String },

    #[error("integrator failure at t = {t}: {reason}")]
    IntegratorFailure { t: f64, reason: String },

    #[error("density matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("need at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("distribution is not normalized: grid mass {mass}")]
    Unnormalized { mass: f64 },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
