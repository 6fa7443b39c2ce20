use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter tuple violates the admissibility rules.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation at a singular point of the ODE.
    #[error("singular point r = {0}")]
    Singular(f64),

    /// Preconditions of a comparison bound are not met.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A bracketing root finder saw no sign change.
    #[error("no sign change on [{a}, {b}] (f(a) = {fa}, f(b) = {fb})")]
    NoSignChange { a: f64, b: f64, fa: f64, fb: f64 },

    /// A trace is not usable for the requested operation.
    #[error("incomplete trace: {0}")]
    IncompleteTrace(String),

    /// Unsupported value of `k` for an operation.
    #[error("unsupported k = {0}")]
    UnsupportedK(u32),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
