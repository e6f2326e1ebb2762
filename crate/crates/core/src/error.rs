use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// A value failed one of the documented invariants. `invariant` is a
    /// stable short name that front ends can surface verbatim.
    #[error("invariant `{invariant}` violated: {detail}")]
    Invariant {
        invariant: &'static str,
        detail: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invariant(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Invariant {
            invariant,
            detail: detail.into(),
        }
    }

    pub(crate) fn dims(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }
}
