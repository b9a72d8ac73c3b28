use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite {quantity} at point of dimension {}", point.len())]
    NonFinite {
        quantity: &'static str,
        point: Vec<f64>,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("design point must have at least one coordinate")]
    EmptyPoint,
    #[error("capped CG called with a zero gradient")]
    ZeroGradient,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("internal invariant violated: {0}")]
    InvariantViolation(&'static str),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("problem `{problem}` does not support dimension {n}")]
    IncompatibleDimension { problem: &'static str, n: usize },
}
