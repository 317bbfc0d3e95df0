use thiserror::Error;

/// Errors surfaced by tensor and layer operations.
#[derive(Debug, Error)]
pub enum NnError {
    /// Operand shapes are incompatible for the requested operation.
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },

    /// A configuration value is outside its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A NaN or infinity was encountered where finite values are required.
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, NnError>;

impl NnError {
    pub(crate) fn dim(
        op: &'static str,
        expected: impl Into<String>,
        got: impl Into<String>,
    ) -> Self {
        NnError::DimensionMismatch {
            op,
            expected: expected.into(),
            got: got.into(),
        }
    }
}
