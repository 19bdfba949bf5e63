use thiserror::Error;

pub type Result<T> = std::result::Result<T, AugError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AugError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The requested operation is not available for this object (for example
    /// exact enumeration of a group above the cutoff, or a mean matrix of a
    /// non-linear action).
    #[error("unsupported operation: {0}")]
    Capability(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty input: {0}")]
    EmptyInput(String),
}

impl AugError {
    /// Whether the error stems from user configuration rather than numerics.
    pub fn is_config_error(&self) -> bool {
        !matches!(self, AugError::Singular(_) | AugError::Numerical(_))
    }
}
