use thiserror::Error;

/// Failure modes of the evaluation suite.
#[derive(Debug, Error)]
pub enum EvalError {
    /// Caller passed structurally invalid inputs (empty slices, mismatched
    /// lengths, out-of-range parameters).
    #[error("invalid input: {0}")]
    Input(String),

    /// A score or intermediate value was NaN or infinite.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Rank statistics are undefined unless both classes are present.
    #[error("both classes required: labels contain only {observed}")]
    SingleClass { observed: &'static str },

    /// No candidate threshold satisfies the requested bound. The message
    /// reports the achievable frontier so callers can relax the bound.
    #[error("no threshold satisfies the bound: {0}")]
    Infeasible(String),

    #[error("model error: {0}")]
    Model(#[from] edgeguard_model::ModelError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;
