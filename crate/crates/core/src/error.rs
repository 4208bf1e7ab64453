use thiserror::Error;

/// Errors raised across the analytics, simulation and allocation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violates a documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A formula was evaluated outside the region where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// No finite cloud-side QoS exponent (or backhaul rate) exists.
    #[error("infeasible backhaul: {0}")]
    InfeasibleBackhaul(String),

    #[error("not found: {0}")]
    NotFound(String),

    /// A hedonic negotiation exceeded its sweep budget.
    #[error("no convergence after {sweeps} sweeps")]
    NonConvergence { sweeps: usize },

    /// The merge/split dynamics revisited a partition.
    #[error("partition recurred during merge/split: {0}")]
    StabilityViolation(String),

    #[error("internal numeric error: {0}")]
    Internal(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
