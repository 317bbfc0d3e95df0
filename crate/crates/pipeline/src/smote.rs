use edgeguard_nn::rng::seeded_rng;
use edgeguard_nn::Tensor2f64;
use rand::Rng;

use crate::error::{PipelineError, Result};
use crate::matrix::FeatureMatrix;

/// Raises the minority class to the majority count by interpolating between
/// each minority point and one of its `k` nearest minority neighbors
/// (Euclidean): `synthetic = base + u * (neighbor - base)`, `u ~ U(0, 1)`.
///
/// Originals are preserved untouched; synthetics are appended at the end.
/// Balanced input comes back unchanged. `k` is capped at `minority - 1`.
pub fn smote(x: &Tensor2f64, y: &[u8], k: usize, seed: u64) -> Result<(Tensor2f64, Vec<u8>)> {
    if x.rows() != y.len() {
        return Err(PipelineError::Data(format!(
            "feature rows {} != label count {}",
            x.rows(),
            y.len()
        )));
    }
    if k == 0 {
        return Err(PipelineError::Config(
            "neighbor count must be at least 1".into(),
        ));
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    let neg = y.len() - pos;
    if pos == neg {
        return Ok((x.clone(), y.to_vec()));
    }
    let minority_label: u8 = if pos < neg { 1 } else { 0 };
    let (n_min, n_maj) = if pos < neg { (pos, neg) } else { (neg, pos) };
    if n_min < 2 {
        return Err(PipelineError::Data(format!(
            "minority class has {n_min} sample(s); oversampling needs at least 2 \
             (lower k or disable oversampling)"
        )));
    }
    let k_eff = k.min(n_min - 1);
    let minority: Vec<usize> = (0..y.len()).filter(|&i| y[i] == minority_label).collect();

    // Brute-force k nearest minority neighbors per minority point, ties
    // broken by index so the result is order-stable.
    let neighbors: Vec<Vec<usize>> = minority
        .iter()
        .map(|&a| {
            let mut dists: Vec<(f64, usize)> = minority
                .iter()
                .filter(|&&b| b != a)
                .map(|&b| {
                    let d: f64 = x
                        .row(a)
                        .iter()
                        .zip(x.row(b))
                        .map(|(&u, &v)| (u - v) * (u - v))
                        .sum();
                    (d, b)
                })
                .collect();
            dists.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("finite").then(p.1.cmp(&q.1)));
            dists.into_iter().take(k_eff).map(|(_, b)| b).collect()
        })
        .collect();

    let need = n_maj - n_min;
    let mut rng = seeded_rng(seed);
    let mut out_x = Tensor2f64::zeros(x.rows() + need, x.cols());
    for r in 0..x.rows() {
        out_x.row_mut(r).copy_from_slice(x.row(r));
    }
    let mut out_y = y.to_vec();
    for s in 0..need {
        let base = minority[s % n_min];
        let nb = neighbors[s % n_min][rng.random_range(0..k_eff)];
        let u: f64 = rng.random();
        let row = out_x.row_mut(x.rows() + s);
        for (j, cell) in row.iter_mut().enumerate() {
            let a = x.get(base, j);
            let b = x.get(nb, j);
            *cell = a + u * (b - a);
        }
        out_y.push(minority_label);
    }
    Ok((out_x, out_y))
}

/// [`smote`] applied to a [`FeatureMatrix`]: synthetics inherit the tag of
/// their base row, and `n_original` marks where they begin.
pub fn oversample_matrix(fm: &FeatureMatrix, k: usize, seed: u64) -> Result<FeatureMatrix> {
    let (x, y) = smote(&fm.x, &fm.y, k, seed)?;
    let n_original = fm.n_rows();
    // Synthetic row s interpolates from base minority row (s % n_min);
    // tags replay that mapping.
    let attack_tags = fm.attack_tags.as_ref().map(|tags| {
        let mut out = tags.clone();
        let pos = fm.y.iter().filter(|&&v| v == 1).count();
        let neg = fm.y.len() - pos;
        if pos != neg {
            let minority_label: u8 = if pos < neg { 1 } else { 0 };
            let minority: Vec<usize> = (0..fm.y.len())
                .filter(|&i| fm.y[i] == minority_label)
                .collect();
            for s in 0..pos.abs_diff(neg) {
                out.push(tags[minority[s % minority.len()]].clone());
            }
        }
        out
    });
    let mut out = FeatureMatrix::new(x, y, fm.feature_names.clone())?;
    out.attack_tags = attack_tags;
    out.n_original = n_original;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use edgeguard_nn::rng::derive_seed;

    fn matrix(rows: &[Vec<f64>]) -> Tensor2f64 {
        Tensor2f64::from_rows(rows).unwrap()
    }

    #[test]
    fn balanced_input_is_identity() {
        let x = matrix(&[vec![0.0, 0.0], vec![1.0, 1.0]]);
        let y = vec![0, 1];
        let (ox, oy) = smote(&x, &y, 5, 1).unwrap();
        assert_eq!(ox, x);
        assert_eq!(oy, y);
    }

    #[test]
    fn two_point_minority_synthesizes_on_the_segment() {
        let x = matrix(&[
            vec![5.0, 5.0],
            vec![6.0, 5.0],
            vec![7.0, 5.0],
            vec![8.0, 5.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        ]);
        let y = vec![0, 0, 0, 0, 1, 1];
        let (ox, oy) = smote(&x, &y, 1, 42).unwrap();
        assert_eq!(ox.rows(), 8);
        assert_eq!(oy.iter().filter(|&&v| v == 1).count(), 4);
        for r in 6..8 {
            let (a, b) = (ox.get(r, 0), ox.get(r, 1));
            assert!((a - b).abs() < 1e-12, "point off the diagonal segment");
            assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn synthetics_are_convex_combinations_of_minority_pairs() {
        use rand::Rng;
        let mut rng = seeded_rng(99);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..100 {
            rows.push(vec![
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random::<f64>(),
            ]);
            y.push(0u8);
        }
        for _ in 0..30 {
            rows.push(vec![
                rng.random::<f64>() + 3.0,
                rng.random::<f64>(),
                rng.random::<f64>(),
            ]);
            y.push(1u8);
        }
        let x = matrix(&rows);
        let (ox, oy) = smote(&x, &y, 5, 7).unwrap();
        let pos = oy.iter().filter(|&&v| v == 1).count();
        let neg = oy.len() - pos;
        assert_eq!((neg, pos), (100, 100));
        // Originals untouched.
        for r in 0..130 {
            assert_eq!(ox.row(r), x.row(r));
        }
        let minority: Vec<usize> = (0..130).filter(|&i| y[i] == 1).collect();
        for s in 130..200 {
            let p = ox.row(s);
            let mut explained = false;
            'pairs: for &a in &minority {
                for &b in &minority {
                    if a == b {
                        continue;
                    }
                    let (ra, rb) = (x.row(a), x.row(b));
                    let d = (0..3).find(|&j| (rb[j] - ra[j]).abs() > 1e-9);
                    let Some(d) = d else { continue };
                    let u = (p[d] - ra[d]) / (rb[d] - ra[d]);
                    if !(-1e-9..=1.0 + 1e-9).contains(&u) {
                        continue;
                    }
                    if (0..3).all(|j| (ra[j] + u * (rb[j] - ra[j]) - p[j]).abs() < 1e-9) {
                        explained = true;
                        break 'pairs;
                    }
                }
            }
            assert!(
                explained,
                "synthetic row {s} is not on any minority segment"
            );
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let x = matrix(&[
            vec![0.0],
            vec![1.0],
            vec![2.0],
            vec![3.0],
            vec![10.0],
            vec![11.0],
            vec![12.0],
        ]);
        let y = vec![0, 0, 0, 0, 1, 1, 1];
        let a = smote(&x, &y, 2, 5).unwrap();
        let b = smote(&x, &y, 2, 5).unwrap();
        let c = smote(&x, &y, 2, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn single_sample_minority_rejected_with_guidance() {
        let x = matrix(&[vec![0.0], vec![1.0], vec![2.0]]);
        let y = vec![0, 0, 1];
        let err = smote(&x, &y, 5, 1).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("at least 2"), "unhelpful message: {msg}");
    }

    #[test]
    fn neighbor_count_capped_at_minority_minus_one() {
        let x = matrix(&[
            vec![0.0],
            vec![1.0],
            vec![2.0],
            vec![3.0],
            vec![4.0],
            vec![10.0],
            vec![11.0],
            vec![12.0],
        ]);
        let y = vec![0, 0, 0, 0, 0, 1, 1, 1];
        // k=5 exceeds minority-1=2; must still succeed.
        let (ox, oy) = smote(&x, &y, 5, 3).unwrap();
        assert_eq!(ox.rows(), 10);
        assert_eq!(oy.iter().filter(|&&v| v == 1).count(), 5);
    }

    #[test]
    fn matrix_wrapper_tracks_originals_and_tags() {
        let x = matrix(&[vec![0.0], vec![1.0], vec![5.0], vec![6.0], vec![7.0]]);
        let mut fm = FeatureMatrix::new(x, vec![1, 1, 0, 0, 0], vec!["v".into()]).unwrap();
        fm.attack_tags = Some(vec![
            "generic".into(),
            "dos".into(),
            "normal".into(),
            "normal".into(),
            "normal".into(),
        ]);
        let out = oversample_matrix(&fm, 1, derive_seed(0, "smote", 0)).unwrap();
        assert_eq!(out.n_rows(), 6);
        assert_eq!(out.n_original, 5);
        let tags = out.attack_tags.as_ref().unwrap();
        assert_eq!(tags.len(), 6);
        // The first synthetic interpolates from minority row 0.
        assert_eq!(tags[5], "generic");
    }
}
