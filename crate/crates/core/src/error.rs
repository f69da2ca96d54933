use thiserror::Error;

/// Errors produced by the coupon-collector engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range for {len} explicit weights")]
    Index { index: usize, len: usize },

    #[error("quadrature did not converge within {panels} panels (estimate {estimate:e}, error {error:e})")]
    ConvergenceFailure { panels: usize, estimate: f64, error: f64 },

    #[error("state space of {states} exceeds the limit of {limit}")]
    StateSpaceTooLarge { states: f64, limit: f64 },

    #[error("{types} coupon types give 2^{types} subsets, above the limit of 2^{limit}")]
    SubsetSpaceTooLarge { types: usize, limit: usize },

    #[error("simulation stalled after {draws} draws")]
    SimulationStall { draws: u64 },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
