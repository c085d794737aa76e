use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),
    #[error("degenerate roots: {0}")]
    DegenerateRoots(String),
    #[error("degenerate problem: {0}")]
    DegenerateProblem(String),
    #[error("ill-posed system: {0}")]
    IllPosed(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("internal consistency: {0}")]
    Consistency(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    /// Stable machine-readable tag, used in JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Domain(_) => "domain",
            Error::UnsupportedKernel(_) => "unsupported-kernel",
            Error::DegenerateRoots(_) => "degenerate-roots",
            Error::DegenerateProblem(_) => "degenerate-problem",
            Error::IllPosed(_) => "ill-posed",
            Error::Range(_) => "range",
            Error::Consistency(_) => "internal-consistency",
            Error::InsufficientData(_) => "insufficient-data",
        }
    }

    /// True for failures of the numerics (singular systems, overflow) as
    /// opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateRoots(_)
                | Error::DegenerateProblem(_)
                | Error::IllPosed(_)
                | Error::Range(_)
                | Error::Consistency(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
