use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

/// Outcome tallies of a binary detector at one operating threshold.
///
/// Invariant: at least one sample was counted (`total() > 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tp: usize,
}

impl ConfusionCounts {
    pub fn new(tn: usize, fp: usize, fn_: usize, tp: usize) -> Result<Self> {
        if tn + fp + fn_ + tp == 0 {
            return Err(EvalError::Input("confusion counts are all zero".into()));
        }
        Ok(ConfusionCounts { tn, fp, fn_, tp })
    }

    pub fn total(&self) -> usize {
        self.tn + self.fp + self.fn_ + self.tp
    }

    pub fn actual_positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn actual_negatives(&self) -> usize {
        self.tn + self.fp
    }
}

/// Rates derived from `ConfusionCounts`. A rate whose denominator is zero is
/// `None` rather than coerced to a number; JSON renders it as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
}

/// Derives the full rate set from outcome tallies.
///
/// `recall` and `tpr` are the same ratio reported under both conventional
/// names. `f1` is undefined when either component rate is undefined or when
/// both are zero.
pub fn metrics_from_counts(c: &ConfusionCounts) -> MetricSet {
    let ratio =
        |num: usize, den: usize| -> Option<f64> { (den > 0).then(|| num as f64 / den as f64) };
    let pos = c.actual_positives();
    let neg = c.actual_negatives();
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, pos);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    MetricSet {
        accuracy: (c.tp + c.tn) as f64 / c.total() as f64,
        precision,
        recall,
        f1,
        tpr: recall,
        tnr: ratio(c.tn, neg),
        fpr: ratio(c.fp, neg),
        fnr: ratio(c.fn_, pos),
    }
}

/// Tallies detector outcomes at threshold `tau`; a sample is predicted
/// positive when its score is `>= tau`.
pub fn confusion(y: &[u8], scores: &[f64], tau: f64) -> Result<ConfusionCounts> {
    validate_labels_scores(y, scores)?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(EvalError::Input(format!(
            "threshold must lie in (0, 1), got {tau}"
        )));
    }
    let mut c = ConfusionCounts {
        tn: 0,
        fp: 0,
        fn_: 0,
        tp: 0,
    };
    for (&label, &score) in y.iter().zip(scores) {
        match (label == 1, score >= tau) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Shared input validation for label/score pairs.
pub(crate) fn validate_labels_scores(y: &[u8], scores: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(EvalError::Input("no samples".into()));
    }
    if y.len() != scores.len() {
        return Err(EvalError::Input(format!(
            "{} labels but {} scores",
            y.len(),
            scores.len()
        )));
    }
    if let Some(bad) = y.iter().find(|&&l| l > 1) {
        return Err(EvalError::Input(format!("label {bad} is not binary")));
    }
    if let Some((i, s)) = scores.iter().enumerate().find(|(_, s)| !s.is_finite()) {
        return Err(EvalError::NonFinite(format!("score[{i}] = {s}")));
    }
    Ok(())
}

/// Rounds a rate to one decimal place in percent, half away from zero.
/// This is the precision used for human-readable summaries.
pub fn as_display_percent(rate: f64) -> f64 {
    (rate * 1000.0).round() / 10.0
}
