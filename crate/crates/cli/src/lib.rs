//! Command-line front end tying the workspace together: synthetic fixtures,
//! CSV preprocessing, centralized and federated training, evaluation, and
//! latency benchmarks, all driven by one JSON config plus a seed.
//!
//! Every stage writes its artifacts and an exact post-override config
//! snapshot into the output directory, so any result can be traced back to
//! the configuration that produced it. Exit codes separate configuration
//! mistakes (2), data problems (3), and runtime breakdowns (4).

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_bench, cmd_evaluate, cmd_fedsim, cmd_preprocess, cmd_synth, cmd_train};
pub use config::{
    parse_profile, ArchPreset, DataConfig, EvalSection, FedSection, Overrides, RunConfig,
};
pub use error::{CliError, Result, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME};
