use thiserror::Error;

/// Errors surfaced by simulation, estimation, and I/O.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("empty measure")]
    EmptyMeasure,

    #[error("time out of range: t = {t}, horizon = {t_end}")]
    TimeOutOfRange { t: f64, t_end: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("model produced non-finite value at t = {t}{}", particle.map(|m| format!(" (particle {m})")).unwrap_or_default())]
    NonFinite {
        t: f64,
        particle: Option<usize>,
        state: Vec<f64>,
    },

    #[error("measure path too short: lag {lag} exceeds horizon {horizon}")]
    MeasurePathTooShort { lag: f64, horizon: f64 },

    #[error("Gram matrix singular; increase samples, shrink dictionary, or set reg > 0 (cond = {cond:.3e})")]
    GramSingular { cond: f64 },

    #[error("eigensolver failed: {detail}")]
    EigenFailure { detail: String },

    #[error("zero vector has no spherical projection")]
    ZeroVector,

    #[error("W2 implemented for d = 1 only (got d = {0})")]
    WassersteinDim(usize),

    #[error("sample sets must have equal size: {0} vs {1}")]
    UnequalSampleSizes(usize, usize),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("file format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
