use serde::{Deserialize, Serialize};

use crate::confusion::{confusion, metrics_from_counts, ConfusionCounts, MetricSet};
use crate::error::Result;
use crate::latency::LatencyReport;
use crate::roc::{roc_auc, RocPoint};
use crate::threshold::ThresholdProfile;

/// Where the evaluated scores came from, echoed verbatim into the report so
/// a result file is self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Free-form description of the evaluated dataset.
    pub dataset: String,
    /// Hex digest of the resolved run configuration.
    pub config_sha256: String,
    pub n_samples: usize,
    pub positives: usize,
    pub negatives: usize,
}

/// Full evaluation result for one model on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub threshold: f64,
    pub profile: Option<ThresholdProfile>,
    pub counts: ConfusionCounts,
    pub metrics: MetricSet,
    pub auc: f64,
    pub roc: Vec<RocPoint>,
    pub latency: Option<LatencyReport>,
    pub provenance: Provenance,
}

/// Assembles counts, rates, and the ROC curve at a fixed threshold.
///
/// `dataset` and `config_sha256` are carried into the provenance block;
/// sample counts are derived from the labels.
pub fn build_report(
    y: &[u8],
    scores: &[f64],
    threshold: f64,
    profile: Option<ThresholdProfile>,
    latency: Option<LatencyReport>,
    dataset: &str,
    config_sha256: &str,
) -> Result<EvalReport> {
    let counts = confusion(y, scores, threshold)?;
    let curve = roc_auc(y, scores)?;
    Ok(EvalReport {
        threshold,
        profile,
        counts,
        metrics: metrics_from_counts(&counts),
        auc: curve.auc,
        roc: curve.points,
        latency,
        provenance: Provenance {
            dataset: dataset.to_string(),
            config_sha256: config_sha256.to_string(),
            n_samples: y.len(),
            positives: counts.actual_positives(),
            negatives: counts.actual_negatives(),
        },
    })
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
