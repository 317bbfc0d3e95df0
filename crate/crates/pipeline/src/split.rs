use edgeguard_nn::rng::{derive_seed, seeded_rng};
use rand::seq::SliceRandom;

use crate::error::{PipelineError, Result};
use crate::matrix::FeatureMatrix;
use crate::raw::RawDataset;

/// Splits row indices into (train, test) keeping per-class proportions.
///
/// The train side gets `round(ratio * n)` rows overall; per-class counts use
/// floor quotas with leftover units handed out by largest fractional part
/// (ties favor the smaller label). Every class must have at least 2 rows so
/// both sides can hold one. Index lists come back sorted.
pub fn split_indices(labels: &[u8], ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(PipelineError::Config(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    if labels.is_empty() {
        return Err(PipelineError::Data("cannot split an empty dataset".into()));
    }
    let mut classes: Vec<u8> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut per_class: Vec<Vec<usize>> = classes
        .iter()
        .map(|&c| {
            labels
                .iter()
                .enumerate()
                .filter(|(_, &y)| y == c)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    for (c, idx) in classes.iter().zip(&per_class) {
        if idx.len() < 2 {
            return Err(PipelineError::Data(format!(
                "class {c} has {} row(s); a stratified split needs at least 2 per class",
                idx.len()
            )));
        }
    }

    let n = labels.len();
    let total_train = (ratio * n as f64).round() as usize;
    let quotas: Vec<f64> = per_class.iter().map(|v| ratio * v.len() as f64).collect();
    let mut train_counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut leftovers = total_train.saturating_sub(train_counts.iter().sum::<usize>());
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).expect("finite").then(a.cmp(&b))
    });
    for &c in order.iter().cycle() {
        if leftovers == 0 {
            break;
        }
        if train_counts[c] < per_class[c].len() - 1 {
            train_counts[c] += 1;
            leftovers -= 1;
        }
    }
    // Degenerate tiny classes can floor to 0; both sides must see every
    // class, so borrow a unit from the largest train allocation.
    for c in 0..classes.len() {
        while train_counts[c] == 0 {
            let donor = (0..classes.len())
                .filter(|&d| train_counts[d] > 1)
                .max_by_key(|&d| train_counts[d])
                .ok_or_else(|| PipelineError::Data("dataset too small to stratify".into()))?;
            train_counts[donor] -= 1;
            train_counts[c] += 1;
        }
    }

    let mut train = Vec::with_capacity(total_train);
    let mut test = Vec::with_capacity(n - total_train);
    for (c, idx) in per_class.iter_mut().enumerate() {
        let mut rng = seeded_rng(derive_seed(seed, "split", u64::from(classes[c])));
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..train_counts[c]]);
        test.extend_from_slice(&idx[train_counts[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified split of an ingested dataset into (train, test).
pub fn stratified_split_raw(
    data: &RawDataset,
    ratio: f64,
    seed: u64,
) -> Result<(RawDataset, RawDataset)> {
    let (train_idx, test_idx) = split_indices(&data.labels, ratio, seed)?;
    Ok((data.select_rows(&train_idx), data.select_rows(&test_idx)))
}

/// Carves a stratified validation set out of the original rows of an encoded
/// matrix. Synthetic rows (indices at and beyond `n_original`) always stay on
/// the training side; validation contains real rows only.
pub fn carve_validation(
    fm: &FeatureMatrix,
    fraction: f64,
    seed: u64,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(PipelineError::Config(format!(
            "validation fraction must be in (0, 1), got {fraction}"
        )));
    }
    let originals = &fm.y[..fm.n_original];
    let (train_idx, val_idx) = split_indices(originals, 1.0 - fraction, seed)?;
    let kept_original = train_idx.len();
    let mut full_train = train_idx;
    full_train.extend(fm.n_original..fm.n_rows());
    let mut train = fm.select_rows(&full_train);
    train.n_original = kept_original;
    let val = fm.select_rows(&val_idx);
    Ok((train, val))
}

#[cfg(test)]
mod tests {
    use super::*;
    use edgeguard_nn::Tensor2f64;

    fn labels(neg: usize, pos: usize) -> Vec<u8> {
        let mut v = vec![0u8; neg];
        v.resize(neg + pos, 1u8);
        v
    }

    fn class_counts(labels: &[u8], idx: &[usize]) -> (usize, usize) {
        let pos = idx.iter().filter(|&&i| labels[i] == 1).count();
        (idx.len() - pos, pos)
    }

    #[test]
    fn exact_division_splits_exactly() {
        let y = labels(40, 60);
        let (train, test) = split_indices(&y, 0.8, 7).unwrap();
        assert_eq!(class_counts(&y, &train), (32, 48));
        assert_eq!(class_counts(&y, &test), (8, 12));
    }

    #[test]
    fn leftover_unit_goes_to_largest_fraction() {
        // quotas: pos 4.8, neg 3.2; one leftover unit lands on pos.
        let y = labels(4, 6);
        let (train, test) = split_indices(&y, 0.8, 7).unwrap();
        assert_eq!(class_counts(&y, &train), (3, 5));
        assert_eq!(class_counts(&y, &test), (1, 1));
    }

    #[test]
    fn partitions_are_disjoint_and_cover() {
        let y = labels(13, 29);
        let (train, test) = split_indices(&y, 0.7, 3).unwrap();
        let mut all: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..42).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_same_split_different_seed_differs() {
        let y = labels(50, 50);
        let a = split_indices(&y, 0.8, 11).unwrap();
        let b = split_indices(&y, 0.8, 11).unwrap();
        let c = split_indices(&y, 0.8, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn tiny_class_rejected() {
        let y = labels(10, 1);
        assert!(split_indices(&y, 0.8, 1).is_err());
    }

    #[test]
    fn two_row_class_lands_on_both_sides() {
        let y = labels(20, 2);
        let (train, test) = split_indices(&y, 0.8, 5).unwrap();
        let (_, train_pos) = class_counts(&y, &train);
        let (_, test_pos) = class_counts(&y, &test);
        assert_eq!(train_pos, 1);
        assert_eq!(test_pos, 1);
    }

    #[test]
    fn bad_ratio_rejected() {
        let y = labels(5, 5);
        assert!(split_indices(&y, 0.0, 1).is_err());
        assert!(split_indices(&y, 1.0, 1).is_err());
    }

    #[test]
    fn validation_carve_keeps_synthetics_in_train() {
        // 4 original rows (2 per class) + 2 synthetic positives.
        let x = Tensor2f64::from_rows(&[
            vec![0.0],
            vec![1.0],
            vec![2.0],
            vec![3.0],
            vec![100.0],
            vec![101.0],
        ])
        .unwrap();
        let mut fm = FeatureMatrix::new(x, vec![0, 0, 1, 1, 1, 1], vec!["v".into()]).unwrap();
        fm.n_original = 4;
        let (train, val) = carve_validation(&fm, 0.5, 9).unwrap();
        // Half of each original class goes to validation.
        assert_eq!(val.n_rows(), 2);
        assert_eq!(val.class_counts(), (1, 1));
        assert!(val.x.data().iter().all(|&v| v < 50.0));
        // Train keeps the other originals plus both synthetics.
        assert_eq!(train.n_rows(), 4);
        assert_eq!(train.n_original, 2);
        let synth: Vec<f64> = train
            .x
            .data()
            .iter()
            .copied()
            .filter(|&v| v > 50.0)
            .collect();
        assert_eq!(synth, vec![100.0, 101.0]);
    }
}
