use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the numerical toolkit.
///
/// The split matters to callers: `Model`, `Precondition` and
/// `InvalidParameter` are input problems, while `Truncation`, `Inconsistency`
/// and friends mean a computation could not be certified at the requested
/// tolerance.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("series did not converge within {terms} terms (argument outside supported range)")]
    SeriesDivergence { terms: usize },

    #[error("truncation not certified: {0}")]
    Truncation(String),

    #[error("negative probability mass {mass:.3e} at offset {index}")]
    NegativeMass { index: usize, mass: f64 },

    #[error("numerical inconsistency: {0}")]
    Inconsistency(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),
}

impl Error {
    /// True when the error reports bad user input rather than a failed
    /// numerical certification.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::Precondition(_) | Error::Model(_)
        )
    }
}
