use thiserror::Error;

/// Errors produced by the coding schemes, the simulator and the tuner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Parameter(String),

    #[error("code construction failed: {0}")]
    Construction(String),

    #[error("insufficient results: {0}")]
    InsufficientResults(String),

    #[error("numerical decode failed: relative residual {residual:e} exceeds {tolerance:e}")]
    NumericalDecode { residual: f64, tolerance: f64 },

    #[error("decode failure for job {job}: {reason}")]
    DecodeFailure { job: usize, reason: String },

    #[error("simulation invariant violated: {0}")]
    SimulationInvariant(String),

    #[error("profile adjustment failed: {0}")]
    Adjustment(String),

    #[error("slope fit failed: {0}")]
    Fit(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// True for errors caused by invalid user-supplied parameters or inputs.
    pub fn is_parameter_error(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_) | Error::Parse(_) | Error::Adjustment(_) | Error::Fit(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
