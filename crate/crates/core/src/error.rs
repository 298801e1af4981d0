use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("mesh is not watertight: {0}")]
    NotWatertight(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("eigensolver did not converge: residual {residual:.3e} after {iterations} iterations")]
    Convergence { residual: f64, iterations: usize },

    #[error("graph is disconnected: {0}")]
    Connectivity(String),

    #[error("invalid configuration field `{field}`: {msg}")]
    Validation { field: String, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("missing upstream artifact: {0}")]
    Dependency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable process exit code per error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } => 2,
            Error::EmptyInput(_) => 3,
            Error::IndexOutOfRange(_) => 4,
            Error::NotWatertight(_) => 5,
            Error::ShapeMismatch(_) => 6,
            Error::Domain(_) => 7,
            Error::Precondition(_) => 8,
            Error::Convergence { .. } => 9,
            Error::Connectivity(_) => 10,
            Error::Validation { .. } => 11,
            Error::Data(_) => 12,
            Error::Dependency(_) => 13,
            Error::Io(_) => 14,
        }
    }
}
