use thiserror::Error;

/// Errors shared across the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EqportError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid market: {0}")]
    InvalidMarket(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no solution: H(inf) = {h_infinity} <= requested level {level}")]
    NoSolution { h_infinity: f64, level: f64 },

    #[error("T0 = {t0} is not in the admissible family index set: {reason}")]
    Membership { t0: f64, reason: String },

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numeric non-convergence: {0}")]
    NonConvergence(String),

    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, EqportError>;
