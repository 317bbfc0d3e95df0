use thiserror::Error;

/// Failure modes of the federated simulator.
#[derive(Debug, Error)]
pub enum FedError {
    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Data cannot be split as requested.
    #[error("partition error: {0}")]
    Partition(String),

    /// Malformed client traffic: duplicate ids, incongruent parameters,
    /// empty aggregation sets.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("model error: {0}")]
    Model(#[from] edgeguard_model::ModelError),

    #[error("pipeline error: {0}")]
    Pipeline(#[from] edgeguard_pipeline::PipelineError),
}

pub type Result<T> = std::result::Result<T, FedError>;
