use thiserror::Error;

use crate::numerics::QuadResult;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Validation(String),

    #[error("non-integer power n = {n} of negative invariant S = {s}")]
    NonIntegerPowerOfNegative { s: f64, n: f64 },

    #[error("singular point at xi = {xi}: T(h, xi + xi1) = 0")]
    SingularPoint { xi: f64 },

    #[error("non-positive logarithm argument {value} at xi = {xi}")]
    NegativeLogArgument { xi: f64, value: f64 },

    #[error("negative radicand {value} in dS/dxi at S = {s}")]
    NegativeRadicand { s: f64, value: f64 },

    #[error("dS/dxi vanishes at S = {s}")]
    DivisionByZeroDerivative { s: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("stencil point x = {x} outside the domain of f")]
    StencilOutOfDomain { x: f64 },

    #[error("adaptive quadrature hit the subdivision limit (estimate {}, error bound {})", partial.value, partial.error_bound)]
    MaxSubdivisions { partial: QuadResult },

    #[error("quadrature failed to reach tolerance (estimate {}, error bound {})", partial.value, partial.error_bound)]
    QuadratureFailure { partial: QuadResult },

    #[error("integral appears divergent: successive estimates {estimates:?}")]
    DivergentIntegral { estimates: Vec<f64> },

    #[error("charge density needs the static gauge (epsilon = 1, alpha1 = alpha2, R2 = -R1): {0}")]
    GaugeNotFixed(String),

    #[error("verification mode mismatch: {0}")]
    ModeParameterMismatch(String),

    #[error("amplitude closure cannot be satisfied: {0}")]
    ClosureUnattainable(String),

    #[error("calibration did not reach tolerance; best value {best} with residual {residual}")]
    NoImprovement { best: f64, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Errors caused by leaving the domain of validity of the closed forms,
    /// as opposed to bad configuration.
    pub fn is_domain(&self) -> bool {
        !matches!(self, Error::Validation(_) | Error::ModeParameterMismatch(_))
    }
}
