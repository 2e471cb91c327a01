use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("point {point:?} lies outside the chart")]
    OutOfChart { point: Vec<f64> },

    #[error("flow left the chart at t = {t} (state {point:?})")]
    ChartEscape { t: f64, point: Vec<f64> },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },

    #[error("fiber computations require a rational point")]
    NonRationalPoint,

    #[error("endpoint mismatch: {0}")]
    EndpointMismatch(String),

    #[error("slice mismatch: {0}")]
    SliceMismatch(String),

    #[error("no transversal slice of extent >= 1e-4 at {point:?}")]
    Transversality { point: Vec<f64> },

    #[error("slice correction failed (residual {residual:e})")]
    CorrectionFailed { residual: f64 },

    #[error("anchor violation: residual {residual:e}")]
    AnchorViolation { residual: f64 },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("membership failure: {0}")]
    Membership(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
