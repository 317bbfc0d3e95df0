use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Schema definition problems: unknown roles, missing or extra columns.
    #[error("schema error: {0}")]
    Schema(String),

    /// A cell failed to parse or violates its column contract.
    #[error("ingest error at row {row}, column '{column}': {message}")]
    Ingest {
        row: usize,
        column: String,
        message: String,
    },

    /// Dataset-level contract violations (empty data, class too small, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A configuration value is outside its valid range.
    #[error("invalid config: {0}")]
    Config(String),

    /// Binary container violations (bad magic, version, truncation).
    #[error("container error: {0}")]
    Container(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Nn(#[from] edgeguard_nn::NnError),
}

pub type Result<T> = std::result::Result<T, PipelineError>;
