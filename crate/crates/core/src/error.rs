use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("negative probability {value} at (x={x}, y={y}, a={a}, b={b})")]
    NegativeProbability {
        x: usize,
        y: usize,
        a: usize,
        b: usize,
        value: f64,
    },
    #[error("distribution for (x={x}, y={y}) sums to {sum} (deviation {deviation:e})")]
    NotNormalized {
        x: usize,
        y: usize,
        sum: f64,
        deviation: f64,
    },
    #[error("table shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mixture weights not representable by any (alpha, v): {0}")]
    NotRepresentable(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("scenario too small: {0}")]
    ScenarioTooSmall(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("invalid wiring: {0}")]
    InvalidWiring(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("numerical instability: residual {residual:e} above threshold {threshold:e}")]
    NumericalInstability { residual: f64, threshold: f64 },
    #[error("no sign change of the rate on [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
