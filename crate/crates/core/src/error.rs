use thiserror::Error;

use crate::timefn::{EvalError, ParseError};

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("time {t} lies outside the working horizon [0, {horizon}]")]
    Horizon { t: f64, horizon: f64 },
    #[error("gap statistics are undefined: {0}")]
    UndefinedGaps(String),
    #[error("delay law violates h(t) <= t at t = {t} (h(t) = {value})")]
    DelayViolation { t: f64, value: f64 },
    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
