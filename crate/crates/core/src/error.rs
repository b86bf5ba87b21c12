use thiserror::Error;

/// Errors raised by the library.
///
/// Variants fall into three groups that the command-line front end maps to
/// distinct exit codes: argument/domain errors, violated hypotheses, and
/// resource limits (horizons and table budgets).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("condition (iv) violated: {0}")]
    ConditionViolated(String),

    #[error("horizon exhausted while certifying block m = {m} (horizon {horizon})")]
    HorizonExhausted { m: usize, horizon: usize },

    #[error("horizon {horizon} too small: {reason}")]
    Horizon { horizon: usize, reason: String },

    #[error(
        "envelope horizon {horizon} exhausted at level {level}: need b_n >= {needed_b:.6e} to certify the tail"
    )]
    EnvelopeHorizon {
        horizon: usize,
        level: usize,
        needed_b: f64,
    },

    #[error("table budget of {budget} distinct maps exceeded")]
    TableBudget { budget: usize },

    #[error("grid too coarse: no witness found; try grid level {required_level} or finer")]
    GridTooCoarse { required_level: u32 },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by a horizon or budget limit rather than bad
    /// input or a failed hypothesis.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            Error::HorizonExhausted { .. }
                | Error::Horizon { .. }
                | Error::EnvelopeHorizon { .. }
                | Error::TableBudget { .. }
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
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
