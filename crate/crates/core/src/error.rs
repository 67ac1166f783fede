use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("facility index {index} out of range (m = {m})")]
    IndexOutOfRange { index: usize, m: usize },

    #[error("solution must open exactly {expected} distinct facilities, got {got}")]
    WrongSolutionSize { expected: usize, got: usize },

    #[error("rectangle width {ell} out of range 1..={n}")]
    WidthOutOfRange { ell: usize, n: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("enumeration cap exceeded: {what} has {count} candidates, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        count: u128,
        cap: u64,
    },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("LP solver failure: {0}")]
    Solver(String),

    #[error("internal consistency violation: {0}")]
    Consistency(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("costs are not metric: {0}")]
    NonMetric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
