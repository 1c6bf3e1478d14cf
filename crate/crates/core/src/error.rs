use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid arm parameters: {0}")]
    InvalidArm(String),

    #[error("absorbing chain: 1 + P^p_01 - P^p_11 = 0, stationary belief undefined")]
    AbsorbingChain,

    #[error("invalid instance spec: {0}")]
    InvalidInstance(String),

    #[error("infinite-horizon value iteration requires discount < 1 (got {0})")]
    UnsupportedDiscount(f64),

    #[error("no sign change in subsidy bracket [{lo}, {hi}]; arm may not be indexable")]
    NonIndexableSuspect { lo: f64, hi: f64 },

    #[error("value iteration did not converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("exact finite-horizon solver supports residual horizons up to {cap}, got {got}")]
    HorizonTooLong { cap: u32, got: u32 },

    #[error("infeasible fairness spec: {0}")]
    Infeasible(String),

    #[error("invalid fairness spec: {0}")]
    InvalidFairness(String),

    #[error("non-monotone epoch: tracker at t={now}, record called with t={got}")]
    NonMonotoneEpoch { now: u64, got: u64 },

    #[error("benefit ratio undefined: oracle reward {oracle} does not exceed no-intervention reward {none}")]
    UndefinedRatio { oracle: f64, none: f64 },

    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
