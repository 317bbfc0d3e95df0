use serde::{Deserialize, Serialize};

use crate::confusion::{confusion, metrics_from_counts, validate_labels_scores};
use crate::error::{EvalError, Result};

/// What a threshold search optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdObjective {
    /// Maximize F1.
    MaxF1,
    /// Keep FPR at or below the bound, then maximize recall.
    FprBound(f64),
    /// Keep recall at or above the bound, then minimize FPR.
    RecallBound(f64),
}

/// A named operating-point policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdProfile {
    pub name: String,
    pub objective: ThresholdObjective,
}

impl ThresholdProfile {
    pub fn balanced() -> Self {
        ThresholdProfile {
            name: "balanced".into(),
            objective: ThresholdObjective::MaxF1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(EvalError::Input("profile name is empty".into()));
        }
        match self.objective {
            ThresholdObjective::MaxF1 => Ok(()),
            ThresholdObjective::FprBound(b) | ThresholdObjective::RecallBound(b) => {
                if b > 0.0 && b < 1.0 {
                    Ok(())
                } else {
                    Err(EvalError::Input(format!(
                        "profile '{}': bound must lie in (0, 1), got {b}",
                        self.name
                    )))
                }
            }
        }
    }
}

/// One evaluated candidate threshold.
struct Candidate {
    tau: f64,
    fpr: f64,
    recall: f64,
    f1: Option<f64>,
}

/// Picks an operating threshold on held-out scores.
///
/// Candidates are the distinct score values (restricted to the open unit
/// interval, the domain of valid thresholds), so every candidate is a
/// realizable operating point. Ties on the objective resolve toward the
/// higher threshold, the more conservative alarm rate. An unsatisfiable
/// bound reports the closest achievable operating point.
pub fn select_threshold(y: &[u8], scores: &[f64], profile: &ThresholdProfile) -> Result<f64> {
    profile.validate()?;
    validate_labels_scores(y, scores)?;
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 {
        return Err(EvalError::SingleClass {
            observed: "negatives",
        });
    }
    if pos == y.len() {
        return Err(EvalError::SingleClass {
            observed: "positives",
        });
    }

    let mut taus: Vec<f64> = scores
        .iter()
        .copied()
        .filter(|s| *s > 0.0 && *s < 1.0)
        .collect();
    taus.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    taus.dedup();
    if taus.is_empty() {
        return Err(EvalError::Input(
            "no score lies strictly inside (0, 1); no candidate thresholds".into(),
        ));
    }

    // Both classes are present, so fpr and recall are always defined.
    let candidates: Vec<Candidate> = taus
        .iter()
        .map(|&tau| {
            let m = metrics_from_counts(&confusion(y, scores, tau)?);
            Ok(Candidate {
                tau,
                fpr: m.fpr.unwrap(),
                recall: m.recall.unwrap(),
                f1: m.f1,
            })
        })
        .collect::<Result<_>>()?;

    match profile.objective {
        ThresholdObjective::MaxF1 => {
            let mut best: Option<(f64, f64)> = None;
            for c in &candidates {
                if let Some(f1) = c.f1 {
                    if best.is_none_or(|(b, _)| f1 >= b) {
                        best = Some((f1, c.tau));
                    }
                }
            }
            best.map(|(_, tau)| tau).ok_or_else(|| {
                EvalError::Infeasible(format!(
                    "profile '{}': F1 is undefined at every candidate threshold",
                    profile.name
                ))
            })
        }
        ThresholdObjective::FprBound(bound) => {
            let mut best: Option<(f64, f64)> = None;
            for c in &candidates {
                if c.fpr <= bound && best.is_none_or(|(r, _)| c.recall >= r) {
                    best = Some((c.recall, c.tau));
                }
            }
            best.map(|(_, tau)| tau).ok_or_else(|| {
                // Frontier: lowest achievable FPR, best recall there.
                let mut f = &candidates[0];
                for c in &candidates {
                    if (c.fpr, -c.recall) < (f.fpr, -f.recall) {
                        f = c;
                    }
                }
                EvalError::Infeasible(format!(
                    "profile '{}': FPR <= {bound} is unachievable; \
                     closest operating point has FPR {:.6} with recall {:.6} at tau {:.6}",
                    profile.name, f.fpr, f.recall, f.tau
                ))
            })
        }
        ThresholdObjective::RecallBound(bound) => {
            let mut best: Option<(f64, f64)> = None;
            for c in &candidates {
                if c.recall >= bound && best.is_none_or(|(f, _)| c.fpr <= f) {
                    best = Some((c.fpr, c.tau));
                }
            }
            best.map(|(_, tau)| tau).ok_or_else(|| {
                let mut f = &candidates[0];
                for c in &candidates {
                    if (-c.recall, c.fpr) < (-f.recall, f.fpr) {
                        f = c;
                    }
                }
                EvalError::Infeasible(format!(
                    "profile '{}': recall >= {bound} is unachievable; \
                     closest operating point has recall {:.6} with FPR {:.6} at tau {:.6}",
                    profile.name, f.recall, f.fpr, f.tau
                ))
            })
        }
    }
}
