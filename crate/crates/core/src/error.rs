use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("dictionary of {requested} entries exceeds the budget of {budget}")]
    Capacity { requested: usize, budget: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("line search failed after {shrinks} step reductions")]
    LineSearchFailure { shrinks: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the `tomo` binary.
    ///
    /// 2 is an input-format problem, 3 a consistency problem between inputs,
    /// 4 a numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Format(_)
            | Error::Json(_)
            | Error::Io(_)
            | Error::Config(_)
            | Error::InvalidGeometry(_)
            | Error::Domain(_)
            | Error::Capacity { .. } => 2,
            Error::Consistency(_) | Error::Dimension { .. } => 3,
            Error::LineSearchFailure { .. } | Error::Numerical(_) | Error::Estimation(_) => 4,
        }
    }
}
