use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dyadic overflow: {0}")]
    Overflow(String),

    #[error("invalid dyadic interval: {0}")]
    InvalidInterval(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid Thompson element: {0}")]
    InvalidElement(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not an isometry (deviation {0:e})")]
    NotIsometry(f64),

    #[error("matrix is not an orthogonal projector (deviation {0:e})")]
    NotProjector(f64),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SizeLimit(_) => 3,
            Error::Io(_) => 4,
            Error::Parse(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
