//! Preprocessing pipeline for tabular network-flow records.
//!
//! The flow mirrors a leakage-safe tabular recipe: ingest CSV against a
//! column schema, drop exact feature+label duplicates, winsorize heavy-tailed
//! numerics, one-hot encode capped categorical vocabularies (reference
//! category dropped), standardize with train-fitted statistics, split with
//! stratification, and optionally rebalance the training side with synthetic
//! minority interpolation. Every fitted statistic comes from the training
//! partition alone; [`transform::apply_transform`] can only replay a fitted
//! [`transform::TransformSpec`], never refit.

pub mod driver;
pub mod error;
pub mod matrix;
pub mod raw;
pub mod schema;
pub mod smote;
pub mod split;
pub mod synth;
pub mod transform;

pub use driver::{run_preprocess, PreprocessAudit, PreprocessOutput};
pub use error::{PipelineError, Result};
pub use matrix::FeatureMatrix;
pub use raw::RawDataset;
pub use schema::{ColumnRole, Schema};
pub use transform::{apply_transform, fit_transform, PipelineOptions, TransformSpec};
