use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A natural parameter, time or model parameter outside its admissible set.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("point {x} lies outside the support {support}")]
    Support { x: f64, support: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Quadrature or root finding failed to reach its tolerance.
    #[error("numeric failure: {message} (achieved residual {residual:e})")]
    Numeric { message: String, residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("target price {target} outside the attainable interval ({lower}, {upper})")]
    Bounds { target: f64, lower: f64, upper: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
