use thiserror::Error;

/// Every failure the engine can report.
///
/// The variants are grouped by the exit code the `qres` binary maps them to:
/// precondition violations (2), parse errors (3), internal assertion
/// failures (4) and I/O (1).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infinite quotient: the lattice has rank deficiency")]
    InfiniteQuotient,
    #[error("not representable: {0}")]
    NotRepresentable(String),
    #[error("no faithful divisor: {0}")]
    NoFaithfulDivisor(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("replay error: {0}")]
    Replay(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid input file: {0}")]
    Invalid(String),
    #[error("internal assertion failed: {0}")]
    InternalAssertion(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Invalid(_) => 3,
            Error::InternalAssertion(_) => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
