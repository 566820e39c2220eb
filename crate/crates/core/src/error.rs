use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("NLI formula outside its validity region: log argument {argument} <= 1")]
    LogArgumentOutOfRange { argument: f64 },

    #[error("bit sequence of length {len} is not a multiple of {bits_per_symbol}")]
    BitLengthMismatch { len: usize, bits_per_symbol: usize },

    #[error("input power constraint violated: block power {actual} W, target {target} W")]
    PowerConstraint { actual: f64, target: f64 },

    #[error("quadrature did not converge: {nodes} -> {doubled} nodes changed the result by {change:e} (tolerance {tolerance:e})")]
    QuadratureNonConvergence {
        nodes: usize,
        doubled: usize,
        change: f64,
        tolerance: f64,
    },

    #[error("split-step did not converge: halving the step changed the energy profile by {change:e} (tolerance {tolerance:e})")]
    StepNonConvergence { change: f64, tolerance: f64 },

    #[error("empty {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
