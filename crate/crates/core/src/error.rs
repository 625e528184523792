use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by model construction, exact computations, sampling and
/// the experiment drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid step distribution: {0}")]
    InvalidStep(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid bridge spec: {0}")]
    InvalidSpec(String),

    #[error("scale equation objective is not finite at H = {at}")]
    NonFiniteObjective { at: f64 },

    #[error("no sign change of the scale equation below H = {limit:e}")]
    BracketFailure { limit: f64 },

    #[error("conditional step law from height {x} has empty support")]
    EmptySupport { x: u64 },

    #[error("tail mass {mass:e} above height {level} at index {index} exceeds tolerance {tolerance:e}; raise K (currently {k})")]
    TruncationOverflow {
        index: usize,
        level: usize,
        mass: f64,
        tolerance: f64,
        k: usize,
    },

    #[error("boundary heights are not connected by any admissible path")]
    EmptyPathSpace,

    #[error("specs differ in more than lambda: {0}")]
    SpecMismatch(String),

    #[error("threshold {threshold} lies beyond the reliable window (K - buffer = {limit})")]
    ThresholdBeyondTruncation { threshold: f64, limit: usize },

    #[error("index {index} out of range 0..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("covariance indices out of order: i = {i} > j = {j}")]
    IndexOrder { i: usize, j: usize },

    #[error("area DP needs {required} cell updates, budget is {budget}")]
    AreaDpBudget { required: u128, budget: u128 },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e}, gap estimate {gap_estimate})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        gap_estimate: f64,
    },

    #[error("enumeration budget exceeded: {paths} candidate paths > {budget}")]
    BudgetExceeded { paths: u128, budget: u128 },

    #[error("conditioning event has probability zero")]
    NullEvent,

    #[error("need at least {needed} grid points, got {got}")]
    InsufficientGrid { needed: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
