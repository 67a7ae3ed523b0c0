use std::fmt;

/// Error type shared by every module in the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum EcompError {
    /// Parameters fall outside the admissible space.
    ParamSpaceViolation(String),
    /// The weight series hit the hard cap before meeting the tail tolerance.
    TruncationFailure { cap: usize },
    /// The certified tail contribution to a moment sum exceeds its tolerance.
    TailDominates { order: u32, bound: f64 },
    /// Operands that must share (p, alpha, beta) do not.
    MismatchedParams(String),
    /// The conditioning event has zero probability.
    ZeroEvent(String),
    /// A conditional-table entry required by the reconstruction is zero.
    DegenerateConditional(String),
    /// A test function exceeded its declared bound on the scanned range.
    UnboundedTestFunction { at: u64, value: f64, bound: f64 },
    /// The operation requires nu > 0.
    DegenerateNu,
    /// The decomposition needs 0 < pmf(0) < 1.
    ZeroAtOrigin(String),
    /// An observed count lies beyond the certified table range.
    SupportViolation { value: u64, max_k: u64 },
    /// The optimizer collapsed without accepting a single step.
    NoImprovement,
    /// No observations were provided.
    EmptyData,
}

impl EcompError {
    /// Stable machine-readable name of the variant, used verbatim in CLI reports.
    pub fn name(&self) -> &'static str {
        match self {
            EcompError::ParamSpaceViolation(_) => "ParamSpaceViolation",
            EcompError::TruncationFailure { .. } => "TruncationFailure",
            EcompError::TailDominates { .. } => "TailDominates",
            EcompError::MismatchedParams(_) => "MismatchedParams",
            EcompError::ZeroEvent(_) => "ZeroEvent",
            EcompError::DegenerateConditional(_) => "DegenerateConditional",
            EcompError::UnboundedTestFunction { .. } => "UnboundedTestFunction",
            EcompError::DegenerateNu => "DegenerateNu",
            EcompError::ZeroAtOrigin(_) => "ZeroAtOrigin",
            EcompError::SupportViolation { .. } => "SupportViolation",
            EcompError::NoImprovement => "NoImprovement",
            EcompError::EmptyData => "EmptyData",
        }
    }
}

impl fmt::Display for EcompError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EcompError::ParamSpaceViolation(msg) => {
                write!(f, "parameters outside the admissible space: {msg}")
            }
            EcompError::TruncationFailure { cap } => {
                write!(
                    f,
                    "series truncation failed to meet the tail tolerance within {cap} terms"
                )
            }
            EcompError::TailDominates { order, bound } => {
                write!(f, "certified tail bound {bound:e} dominates the order-{order} moment sum; rebuild the table with a tighter tail tolerance")
            }
            EcompError::MismatchedParams(msg) => {
                write!(f, "mismatched parameters: {msg}")
            }
            EcompError::ZeroEvent(msg) => {
                write!(f, "conditioning event has zero probability: {msg}")
            }
            EcompError::DegenerateConditional(msg) => {
                write!(f, "degenerate conditional input: {msg}")
            }
            EcompError::UnboundedTestFunction { at, value, bound } => {
                write!(
                    f,
                    "test function violates its declared bound {bound} at k = {at} (|g| = {value})"
                )
            }
            EcompError::DegenerateNu => write!(f, "operation requires nu > 0"),
            EcompError::ZeroAtOrigin(msg) => write!(f, "decomposition undefined: {msg}"),
            EcompError::SupportViolation { value, max_k } => {
                write!(f, "observed count {value} lies beyond the certified table range (max k = {max_k})")
            }
            EcompError::NoImprovement => {
                write!(f, "simplex collapsed without accepting any step")
            }
            EcompError::EmptyData => write!(f, "no observations provided"),
        }
    }
}

impl std::error::Error for EcompError {}

pub type Result<T> = std::result::Result<T, EcompError>;
