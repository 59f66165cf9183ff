use thiserror::Error;

pub type Result<T> = std::result::Result<T, SvieError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvieError {
    /// Arguments outside the domain where an integral or kernel is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{name} must lie in {range}, got {value}")]
    InvalidExponent {
        name: &'static str,
        range: &'static str,
        value: f64,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("{len} is not divisible by {factor}")]
    NotDivisible { len: usize, factor: usize },

    /// Window endpoint that does not fall on a fine-grid node.
    #[error("time {time} is not aligned to the fine grid with step {step}")]
    Misaligned { time: f64, step: f64 },

    #[error("no uniform draw for level {level}, step {step}")]
    MissingTau { level: usize, step: usize },

    #[error("stage cache has no entry for step {0}")]
    MissingCache(usize),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("rate estimation needs at least 2 rows with positive error, found {0}")]
    InsufficientData(usize),
}
