use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular (log|det| = {log_det})")]
    SingularMatrix { log_det: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("singular value function requires s >= 0, got {0}")]
    NegativeS(f64),
    #[error("dimension {0} outside supported range 1..=8")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("word {0:?} is not admissible")]
    InadmissibleWord(Vec<usize>),
    #[error("point {0:?} lies outside the system domain")]
    PointOutsideDomain(Vec<f64>),
    #[error("potential does not decrease along extension of {0:?}")]
    NonContractiveH(Vec<usize>),
    #[error("estimated {estimated} leaf evaluations exceed budget {budget}")]
    BudgetExceeded { estimated: f64, budget: u64 },
    #[error("pressure does not change sign on the search interval (P(lo) = {p_lo})")]
    NoSignChange { p_lo: f64 },
    #[error("measure does not match the symbolic space: {0}")]
    MeasureSupportMismatch(String),
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),
    #[error("Lyapunov exponent {0} is not negative")]
    NonNegativeExponent(f64),
    #[error("invalid subshift: {0}")]
    InvalidSubshift(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
