use thiserror::Error;

/// Errors raised by the clustering core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dataset must contain at least one point")]
    EmptyDataset,

    #[error("points must have at least one coordinate")]
    ZeroDimension,

    #[error("non-finite coordinate at point {point}, column {column}")]
    NonFinite { point: usize, column: usize },

    #[error("label count {labels} does not match point count {points}")]
    LabelCount { labels: usize, points: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("densities have not been registered with the index")]
    DensitiesNotRegistered,

    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
