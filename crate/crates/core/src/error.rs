use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fields live on different mode bases")]
    BasisMismatch,

    #[error("spectral function is not finite at omega^2 = {at}")]
    Domain { at: f64 },

    #[error("operator is not strictly positive (smallest eigenvalue {min_eigenvalue:e})")]
    NotStrictlyPositive { min_eigenvalue: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("quadrature did not reach tolerance (error estimate {estimate:e})")]
    Quadrature { estimate: f64 },

    #[error("negative potential sample {value:e} at x = {at}")]
    NegativePotential { value: f64, at: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("budget exceeded: {0}")]
    Budget(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
