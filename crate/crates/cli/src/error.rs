use edgeguard_eval::EvalError;
use edgeguard_fedsim::FedError;
use edgeguard_model::ModelError;
use edgeguard_pipeline::PipelineError;
use thiserror::Error;

/// Top-level failure classes, one per process exit code. Every library
/// error funnels into exactly one class so scripts can branch on the code
/// alone: 2 means fix the configuration, 3 means fix the data or artifact
/// paths, 4 means the run itself broke down numerically.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or contradictory configuration. Exit code 2.
    #[error("{0}")]
    Config(String),

    /// Missing, unreadable, or malformed data and artifacts. Exit code 3.
    #[error("{0}")]
    Data(String),

    /// Numerical or protocol breakdown at run time. Exit code 4.
    #[error("{0}")]
    Runtime(String),
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) => CliError::Config(e.to_string()),
            PipelineError::Schema(_)
            | PipelineError::Ingest { .. }
            | PipelineError::Data(_)
            | PipelineError::Container(_)
            | PipelineError::Io(_)
            | PipelineError::Csv(_) => CliError::Data(e.to_string()),
            PipelineError::Nn(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Arch(_) | ModelError::Config(_) => CliError::Config(e.to_string()),
            ModelError::Format(_) | ModelError::Io(_) => CliError::Data(e.to_string()),
            ModelError::Diverged { .. } | ModelError::Nn(_) => CliError::Runtime(e.to_string()),
            ModelError::Pipeline(p) => p.into(),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            // A bound no operating point can satisfy is a profile problem.
            EvalError::Infeasible(_) => CliError::Config(e.to_string()),
            EvalError::Input(_) | EvalError::SingleClass { .. } | EvalError::Io(_) => {
                CliError::Data(e.to_string())
            }
            EvalError::NonFinite(_) => CliError::Runtime(e.to_string()),
            EvalError::Json(_) => CliError::Data(e.to_string()),
            EvalError::Model(m) => m.into(),
        }
    }
}

impl From<FedError> for CliError {
    fn from(e: FedError) -> Self {
        match e {
            // Partition failures mean the client count does not fit the
            // data; the knob, not the data, is what the user changes.
            FedError::Config(_) | FedError::Partition(_) => CliError::Config(e.to_string()),
            FedError::Protocol(_) => CliError::Runtime(e.to_string()),
            FedError::Model(m) => m.into(),
            FedError::Pipeline(p) => p.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
