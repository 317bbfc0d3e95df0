//! Federated-averaging simulator: splits a training matrix into per-client
//! shards, trains local copies of the fused detector, and merges them by
//! sample-count-weighted averaging under a seeded round schedule.
//!
//! The coordinator only ever sees parameters and scalar metric summaries;
//! raw rows stay inside `ClientShard` and never appear in round transcripts.
//! A single-client schedule degenerates to exactly centralized training,
//! bit for bit, because a lone update bypasses the averaging arithmetic and
//! participant seeds are derived, not drawn.

pub mod error;
pub mod partition;
pub mod round;
pub mod run;

pub use error::{FedError, Result};
pub use partition::{partition, ClientShard, PartitionScheme};
pub use round::{aggregate, local_update, participant_seed, ClientUpdate};
pub use run::{run_rounds, simulate, DegradedClient, FedConfig, LocalMetrics, RoundRecord};
