use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate denominator in {context} (|value| = {value:e})")]
    DegenerateDenominator { context: &'static str, value: f64 },

    #[error("singular network: {0}")]
    SingularNetwork(String),

    #[error("zero-impedance (bolted) fault is not supported; use a finite fault impedance")]
    BoltedFault,

    #[error("load flow did not converge after {iterations} iterations (last residual {residual:e})")]
    LoadFlowNonConvergence { iterations: usize, residual: f64 },

    #[error("load of {p_pu} + j{q_pu} p.u. is beyond the feeder transfer capability")]
    InfeasibleLoad { p_pu: f64, q_pu: f64 },

    #[error("step size underflow at t = {t} s (h = {h:e} s)")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("non-finite value in {context} at t = {t} s")]
    NonFinite { t: f64, context: String },

    #[error("mode switching does not progress at t = {t} s")]
    Chattering { t: f64 },

    #[error("no sign change on [{t1}, {t2}]")]
    NoSignChange { t1: f64, t2: f64 },

    #[error("series do not overlap in time")]
    NoOverlap,

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("io: {0}")]
    Io(String),

    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical procedures, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateDenominator { .. }
                | Error::SingularNetwork(_)
                | Error::LoadFlowNonConvergence { .. }
                | Error::InfeasibleLoad { .. }
                | Error::StepSizeUnderflow { .. }
                | Error::NonFinite { .. }
                | Error::Chattering { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
