use alloc::string::String;

/// Errors produced by the analysis core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("snapshot `{0}` is empty")]
    EmptySnapshot(String),

    #[error("word surface must not be empty")]
    EmptySurface,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("series too short: need at least {needed} values, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("probability vector does not sum to 1 (sum = {0})")]
    NotADistribution(f64),

    #[error("corpus too small to sample: {total} tokens, need more than {required}")]
    CorpusTooSmall { total: u64, required: u64 },

    #[error("binomial stage undershot the target {target} on every one of {attempts} attempts")]
    Undershoot { target: u64, attempts: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("year range {from}..={to} is empty or outside the covered range {covered_from}..={covered_to}")]
    YearRange {
        from: i32,
        to: i32,
        covered_from: i32,
        covered_to: i32,
    },

    #[error("insufficient span: {available} snapshots available, lag {lag} needs at least {needed}")]
    InsufficientSpan { available: usize, lag: u32, needed: usize },

    #[error("invalid dissimilarity matrix: {0}")]
    InvalidMatrix(String),
}

pub type Result<T> = core::result::Result<T, Error>;
