use thiserror::Error;

/// Errors surfaced by the lab's numerical operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("degenerate T: log T = {0} must exceed e")]
    DegenerateT(f64),
    #[error("cutoff too large: beta_1 = {beta1} exceeds e^-cutoff = {bound}")]
    CutoffTooLarge { beta1: f64, bound: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("limit too small: {0} (need at least 2)")]
    LimitTooSmall(u64),
    #[error("limit too large: {0} (at most 2^32)")]
    LimitTooLarge(u64),
    #[error("smoothing shorter than range: log x = {smoothing} < log(limit) = {range}")]
    SmoothingShorterThanRange { smoothing: f64, range: f64 },
    #[error("table too short: need primes up to e^{needed_log:.4}, table limit is {limit}")]
    TableTooShort { needed_log: f64, limit: u64 },
    #[error("x out of range: log x = {log_x} must lie in [log 2, 2 log T = {max}]")]
    XOutOfRange { log_x: f64, max: f64 },
    #[error("lambda = {0} is below lambda_0")]
    LambdaBelowThreshold(f64),
    #[error("height out of range: |t| = {0} exceeds 1e10")]
    HeightOutOfRange(f64),
    #[error("levels span too narrow: observed maximum {observed} exceeds top level {top}")]
    LevelsTooNarrow { observed: f64, top: f64 },
    #[error("length condition violated: {0}")]
    LengthCondition(String),
    #[error("coverage mismatch: assignment has {assigned} primes, table has {table}")]
    CoverageMismatch { assigned: usize, table: usize },
    #[error("dimension too high: {0} primes (at most 5)")]
    DimensionTooHigh(usize),
    #[error("construction failed validation: {0}")]
    ConstructionFailed(String),
    #[error("outside certified range: |x| = {x} > X = {range}")]
    OutsideCertifiedRange { x: f64, range: f64 },
    #[error("cache file: {0}")]
    Cache(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("schema violations:\n  {}", .0.join("\n  "))]
    Schema(Vec<String>),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> LabError {
    LabError::InvalidParam {
        name,
        reason: reason.into(),
    }
}
