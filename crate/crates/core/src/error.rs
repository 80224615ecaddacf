use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The selected rows do not span the model space, so `Q_sub` has no
    /// Cholesky factor.
    #[error("moment matrix is singular: the selected rows do not span the model space")]
    Singular,
    #[error("downdate would break positive definiteness of the moment matrix")]
    DowndateNotPositiveDefinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("column {0} is constant, scaling to [-1, 1] is undefined")]
    ConstantColumn(usize),
    #[error("subdata size {k} exceeds the {n} available rows")]
    SubsetTooLarge { k: usize, n: usize },
    #[error("candidates per covariate K = {0} must be at least 2")]
    InvalidCandidateCount(usize),
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("a response vector is required")]
    MissingResponse,
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for failures rooted in the numerics (rank deficiency, loss of
    /// positive definiteness) rather than in bad arguments.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular | Error::DowndateNotPositiveDefinite)
    }
}
