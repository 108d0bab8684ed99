use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index set `{0}` overlaps the interior domain")]
    Overlap(&'static str),
    #[error("index set `{0}` is empty")]
    EmptySet(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fractional exponent must be non-negative, got {0}")]
    NonPositiveExponent(f64),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("field is not supported where expected: {0}")]
    Support(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("step matrix is singular at step {0}")]
    SingularStepMatrix(usize),
    #[error("solution norm exceeded {limit:e} at step {step}")]
    BlowUp { step: usize, limit: f64 },
    #[error("fixed-point iteration is not contracting (ratios {ratios:?})")]
    NoContraction { ratios: Vec<f64> },
    #[error("fixed-point iteration did not converge in {0} iterations")]
    MaxIterExceeded(usize),
    #[error("Westervelt runs need s > n/2 (s = {s}, n = {n})")]
    DimensionGate { s: f64, n: usize },
    #[error("order {0} exceeds the supported maximum of 8")]
    OrderTooLarge(usize),
    #[error("missing derivative for multi-index {0:?}")]
    MissingDerivative(Vec<usize>),
    #[error("derivative of order {order} unsupported: {reason}")]
    DerivativeOrderUnsupported { order: usize, reason: String },
    #[error("input bank is empty")]
    EmptyBank,
    #[error("linear map is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("divisor too small: {0}")]
    SmallDivisor(String),
    #[error("exponents must satisfy 0 < r1 < ... < rL <= 1, got {0:?}")]
    ExponentOrderViolation(Vec<f64>),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("checksum mismatch for {0}")]
    Checksum(String),
}

impl Error {
    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Overlap(_)
            | Error::EmptySet(_)
            | Error::InvalidGrid(_)
            | Error::NonPositiveExponent(_)
            | Error::InvalidParameter(_)
            | Error::ExponentOrderViolation(_)
            | Error::DimensionGate { .. }
            | Error::Json(_) => 1,
            Error::EmptyBank | Error::IllConditioned(_) | Error::SmallDivisor(_) => 3,
            _ => 2,
        }
    }
}
