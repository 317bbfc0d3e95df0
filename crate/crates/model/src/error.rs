use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("architecture: {0}")]
    Arch(String),

    #[error("training diverged at epoch {epoch}: {message}")]
    Diverged {
        epoch: usize,
        message: String,
        /// Parameters from the last completed finite epoch, for salvage.
        last_good: Box<crate::net::FusedNet<f64>>,
    },

    #[error("model file: {0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Nn(#[from] edgeguard_nn::NnError),

    #[error(transparent)]
    Pipeline(#[from] edgeguard_pipeline::PipelineError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;
