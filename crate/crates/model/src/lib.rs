//! Assembly, training, and serialization of the fused three-branch
//! detector: a dense encoder with auxiliary reconstruction, a convolutional
//! feature extractor, and stacked bidirectional recurrent layers, merged
//! through a dense head into one attack probability per row.

pub mod arch;
pub mod error;
pub mod net;
pub mod serial;
pub mod train;

pub use arch::ArchDescriptor;
pub use error::{ModelError, Result};
pub use net::{buffer_names, BatchCache, FusedGrads, FusedNet};
pub use serial::{load_model, save_model};
pub use train::{evaluate_model, train, BinaryCounts, EpochRecord, TrainConfig};

/// Default-precision network used by the pipeline and simulators.
pub type FusedNetF64 = FusedNet<f64>;
