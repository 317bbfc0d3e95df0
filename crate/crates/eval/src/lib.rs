//! Evaluation suite for binary detectors: confusion tallies with
//! undefined-aware rates, ROC curves with trapezoid AUC, operating-threshold
//! selection against named policies, and wall-clock latency benchmarks of
//! the inference path.
//!
//! Scores are probabilities in the unit interval; a sample is predicted
//! positive when its score reaches the threshold. Rates whose denominator is
//! zero are reported as undefined rather than coerced to a number.

pub mod confusion;
pub mod error;
pub mod latency;
pub mod report;
pub mod roc;
pub mod threshold;

pub use confusion::{
    as_display_percent, confusion, metrics_from_counts, ConfusionCounts, MetricSet,
};
pub use error::{EvalError, Result};
pub use latency::{latency_bench, BatchLatency, LatencyConfig, LatencyReport};
pub use report::{build_report, EvalReport, Provenance};
pub use roc::{roc_auc, write_roc_csv, RocCurve, RocPoint};
pub use threshold::{select_threshold, ThresholdObjective, ThresholdProfile};
