use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular tensor (det = {det:e})")]
    SingularTensor { det: f64 },

    #[error("non-positive Jacobian (J = {jacobian:e})")]
    NonPositiveJacobian { jacobian: f64 },

    #[error("element {element} inverted at quadrature point {point} (J = {jacobian:e})")]
    ElementInversion {
        element: usize,
        point: usize,
        jacobian: f64,
    },

    #[error("operation not supported for scheme {0}")]
    UnsupportedScheme(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown surface set '{0}'")]
    UnknownSet(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error(
        "Newton iteration did not converge at step {step} (t = {time}): \
         residual {residual:e} after {iterations} iterations"
    )]
    NonConvergence {
        step: usize,
        time: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
