use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid instance: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("point {0:?} lies outside its region")]
    OutsideRegion((f64, f64)),

    #[error("objective mode `regression` requires a fitted regression model")]
    MissingRegression,

    #[error("linear program failed: {0}")]
    Lp(String),
}
