use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::confusion::validate_labels_scores;
use crate::error::{EvalError, Result};

/// One operating point of the detector as the decision threshold sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// A swept ROC curve together with its area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub auc: f64,
    pub points: Vec<RocPoint>,
}

/// Computes the ROC curve and its trapezoid area.
///
/// The curve starts at (0,0), adds one point per distinct score value in
/// descending order, and ends at (1,1). Samples sharing a score enter as a
/// single group, so a tie block forms one diagonal segment and the trapezoid
/// rule credits it 0.5 per tied pair, matching the rank-statistic convention.
/// Labels with a single class carry no ranking information and are rejected.
pub fn roc_auc(y: &[u8], scores: &[f64]) -> Result<RocCurve> {
    validate_labels_scores(y, scores)?;
    let pos = y.iter().filter(|&&l| l == 1).count();
    let neg = y.len() - pos;
    if pos == 0 {
        return Err(EvalError::SingleClass {
            observed: "negatives",
        });
    }
    if neg == 0 {
        return Err(EvalError::SingleClass {
            observed: "positives",
        });
    }

    let mut idx: Vec<usize> = (0..y.len()).collect();
    // Scores were validated finite, so the comparison is total.
    idx.sort_unstable_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = Vec::with_capacity(y.len() + 2);
    points.push(RocPoint { fpr: 0.0, tpr: 0.0 });
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < idx.len() {
        let group_score = scores[idx[i]];
        while i < idx.len() && scores[idx[i]] == group_score {
            if y[idx[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }

    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum();
    Ok(RocCurve { auc, points })
}

/// Writes the curve as two-column CSV with a header row.
pub fn write_roc_csv<W: Write>(points: &[RocPoint], mut w: W) -> Result<()> {
    writeln!(w, "fpr,tpr")?;
    for p in points {
        writeln!(w, "{},{}", p.fpr, p.tpr)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_worked_four_sample_curve() {
        let y = [1u8, 0, 1, 0];
        let scores = [0.9, 0.8, 0.2, 0.1];
        let RocCurve { auc, points } = roc_auc(&y, &scores).unwrap();
        assert!((auc - 0.75).abs() < 1e-12);
        let want = [(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)];
        assert_eq!(points.len(), want.len());
        for (p, (fpr, tpr)) in points.iter().zip(want) {
            assert_eq!((p.fpr, p.tpr), (fpr, tpr));
        }
    }

    #[test]
    fn separated_scores_have_unit_area() {
        let y = [0u8, 0, 1, 1, 1];
        let scores = [0.1, 0.3, 0.7, 0.8, 0.9];
        let auc = roc_auc(&y, &scores).unwrap().auc;
        assert!((auc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverted_scores_have_zero_area() {
        let y = [1u8, 1, 0, 0];
        let scores = [0.1, 0.2, 0.8, 0.9];
        let auc = roc_auc(&y, &scores).unwrap().auc;
        assert!(auc.abs() < 1e-12);
    }

    #[test]
    fn fully_tied_scores_give_half_credit() {
        let y = [1u8, 0, 1, 0, 1];
        let scores = [0.4; 5];
        let RocCurve { auc, points } = roc_auc(&y, &scores).unwrap();
        assert_eq!(auc, 0.5);
        // One diagonal segment: (0,0) then (1,1).
        assert_eq!(points.len(), 2);
    }

    #[test]
    fn partial_tie_matches_rank_statistic() {
        // Pairs: (0.9 vs 0.5) win, (0.9 vs 0.2) win, (0.5 vs 0.5) half,
        // (0.5 vs 0.2) win. AUC = 3.5 / 4.
        let y = [1u8, 1, 0, 0];
        let scores = [0.9, 0.5, 0.5, 0.2];
        let auc = roc_auc(&y, &scores).unwrap().auc;
        assert!((auc - 3.5 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(matches!(
            roc_auc(&[1, 1], &[0.2, 0.8]),
            Err(EvalError::SingleClass {
                observed: "positives"
            })
        ));
        assert!(matches!(
            roc_auc(&[0, 0], &[0.2, 0.8]),
            Err(EvalError::SingleClass {
                observed: "negatives"
            })
        ));
    }

    #[test]
    fn curve_has_endpoints_and_is_monotone() {
        let y = [0u8, 1, 0, 1, 1, 0, 0, 1, 0, 1];
        let scores = [0.3, 0.6, 0.6, 0.2, 0.9, 0.1, 0.55, 0.7, 0.8, 0.4];
        let points = roc_auc(&y, &scores).unwrap().points;
        assert_eq!((points[0].fpr, points[0].tpr), (0.0, 0.0));
        let last = points.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in points.windows(2) {
            assert!(w[1].fpr >= w[0].fpr);
            assert!(w[1].tpr >= w[0].tpr);
        }
    }

    #[test]
    fn csv_has_header_and_one_row_per_point() {
        let y = [1u8, 0];
        let scores = [0.8, 0.2];
        let points = roc_auc(&y, &scores).unwrap().points;
        let mut buf = Vec::new();
        write_roc_csv(&points, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "fpr,tpr");
        assert_eq!(lines.len(), points.len() + 1);
        assert_eq!(lines[1], "0,0");
    }
}
