use edgeguard_nn::rng::{derive_seed, seeded_rng};
use edgeguard_pipeline::FeatureMatrix;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{FedError, Result};

/// How training rows are spread across simulated clients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionScheme {
    /// Stratified round-robin: every client sees the global class mix.
    Iid,
    /// Per-class client proportions drawn from a symmetric Dirichlet with
    /// the given concentration; small values produce strong label skew,
    /// large values converge to the IID mix.
    LabelSkew { alpha: f64 },
}

/// One client's private slice of the training set.
#[derive(Debug, Clone)]
pub struct ClientShard {
    pub client_id: usize,
    pub data: FeatureMatrix,
}

impl ClientShard {
    pub fn n_rows(&self) -> usize {
        self.data.n_rows()
    }
}

/// Splits `fm` into disjoint per-client shards covering every row.
///
/// Rows keep their original relative order inside each shard, so a
/// single-client partition reproduces the input matrix exactly. Every shard
/// is guaranteed at least one row; when a skew draw leaves a client empty it
/// takes a row from the largest shard.
pub fn partition(
    fm: &FeatureMatrix,
    n_clients: usize,
    scheme: &PartitionScheme,
    seed: u64,
) -> Result<Vec<ClientShard>> {
    if n_clients == 0 {
        return Err(FedError::Config("n_clients must be at least 1".into()));
    }
    let n = fm.n_rows();
    if n_clients > n {
        return Err(FedError::Partition(format!(
            "cannot split {n} rows across {n_clients} clients"
        )));
    }
    if let PartitionScheme::LabelSkew { alpha } = scheme {
        if !(alpha.is_finite() && *alpha > 0.0) {
            return Err(FedError::Config(format!(
                "label-skew concentration must be positive and finite, got {alpha}"
            )));
        }
    }

    // Per-class index pools, shuffled with a class-specific stream so the
    // same seed always deals the same hands.
    let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); n_clients];
    for class in 0..2u8 {
        let mut pool: Vec<usize> = (0..n).filter(|&i| fm.y[i] == class).collect();
        if pool.is_empty() {
            continue;
        }
        let mut rng = seeded_rng(derive_seed(seed, "class", class as u64));
        pool.shuffle(&mut rng);
        match scheme {
            PartitionScheme::Iid => {
                for (i, idx) in pool.into_iter().enumerate() {
                    assigned[i % n_clients].push(idx);
                }
            }
            PartitionScheme::LabelSkew { alpha } => {
                let gamma = Gamma::new(*alpha, 1.0)
                    .map_err(|e| FedError::Config(format!("bad concentration: {e}")))?;
                let draws: Vec<f64> = (0..n_clients).map(|_| gamma.sample(&mut rng)).collect();
                let total: f64 = draws.iter().sum();
                let props: Vec<f64> = if total > 0.0 {
                    draws.iter().map(|d| d / total).collect()
                } else {
                    // All draws underflowed to zero (tiny alpha): fall back
                    // to an even split rather than divide by zero.
                    vec![1.0 / n_clients as f64; n_clients]
                };
                let counts = largest_remainder(&props, pool.len());
                let mut rows = pool.into_iter();
                for (k, &cnt) in counts.iter().enumerate() {
                    assigned[k].extend(rows.by_ref().take(cnt));
                }
            }
        }
    }

    rebalance_empty(&mut assigned);
    Ok(assigned
        .into_iter()
        .enumerate()
        .map(|(client_id, mut idx)| {
            idx.sort_unstable();
            ClientShard {
                client_id,
                data: fm.select_rows(&idx),
            }
        })
        .collect())
}

/// Integer apportionment of `total` items by `props`, largest remainder
/// first; ties resolve toward the lower client index.
fn largest_remainder(props: &[f64], total: usize) -> Vec<usize> {
    let quotas: Vec<f64> = props.iter().map(|p| p * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..props.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for k in 0..total.saturating_sub(assigned) {
        counts[order[k % order.len()]] += 1;
    }
    counts
}

/// Moves one row from the largest shard into each empty one. Feasible
/// whenever clients do not outnumber rows.
fn rebalance_empty(assigned: &mut [Vec<usize>]) {
    loop {
        let Some(empty) = assigned.iter().position(Vec::is_empty) else {
            return;
        };
        let donor = (0..assigned.len())
            .max_by_key(|&k| assigned[k].len())
            .unwrap();
        let moved = assigned[donor].pop().unwrap();
        assigned[empty].push(moved);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use edgeguard_nn::Tensor2;

    /// Rows are tagged through feature 0 so tests can recover the original
    /// index of every shard row.
    fn tagged_matrix(n: usize, positives: usize) -> FeatureMatrix {
        let mut x = Tensor2::zeros(n, 2);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            x.row_mut(i)[0] = i as f64;
            x.row_mut(i)[1] = -(i as f64);
            y.push(u8::from(i < positives));
        }
        FeatureMatrix::new(x, y, vec!["tag".into(), "neg_tag".into()]).unwrap()
    }

    fn recovered_indices(shards: &[ClientShard]) -> Vec<usize> {
        let mut idx: Vec<usize> = shards
            .iter()
            .flat_map(|s| (0..s.n_rows()).map(|r| s.data.x.row(r)[0] as usize))
            .collect();
        idx.sort_unstable();
        idx
    }

    #[test]
    fn iid_partition_is_stratified_and_conserving() {
        let fm = tagged_matrix(1000, 400);
        let shards = partition(&fm, 4, &PartitionScheme::Iid, 11).unwrap();
        assert_eq!(shards.len(), 4);
        for s in &shards {
            let (neg, pos) = s.data.class_counts();
            assert_eq!(pos, 100);
            assert_eq!(neg, 150);
        }
        assert_eq!(recovered_indices(&shards), (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn uneven_counts_differ_by_at_most_one() {
        let fm = tagged_matrix(103, 41);
        let shards = partition(&fm, 4, &PartitionScheme::Iid, 5).unwrap();
        let sizes: Vec<usize> = shards.iter().map(ClientShard::n_rows).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 103);
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        // Stratified dealing: off-by-one per class at most.
        assert!(hi - lo <= 2, "sizes {sizes:?}");
        for s in &shards {
            let (_, pos) = s.data.class_counts();
            assert!((10..=11).contains(&pos), "pos {pos}");
        }
    }

    #[test]
    fn single_client_partition_preserves_row_order() {
        let fm = tagged_matrix(25, 10);
        let shards = partition(&fm, 1, &PartitionScheme::Iid, 3).unwrap();
        assert_eq!(shards.len(), 1);
        let tags: Vec<usize> = (0..25)
            .map(|r| shards[0].data.x.row(r)[0] as usize)
            .collect();
        assert_eq!(tags, (0..25).collect::<Vec<_>>());
    }

    #[test]
    fn partition_is_deterministic_and_seed_sensitive() {
        let fm = tagged_matrix(60, 24);
        let a = partition(&fm, 3, &PartitionScheme::Iid, 7).unwrap();
        let b = partition(&fm, 3, &PartitionScheme::Iid, 7).unwrap();
        let c = partition(&fm, 3, &PartitionScheme::Iid, 8).unwrap();
        let tags = |shards: &[ClientShard]| -> Vec<Vec<usize>> {
            shards
                .iter()
                .map(|s| {
                    (0..s.n_rows())
                        .map(|r| s.data.x.row(r)[0] as usize)
                        .collect()
                })
                .collect()
        };
        assert_eq!(tags(&a), tags(&b));
        assert_ne!(tags(&a), tags(&c));
    }

    #[test]
    fn high_concentration_skew_approaches_the_global_mix() {
        let fm = tagged_matrix(1200, 480);
        let shards = partition(&fm, 4, &PartitionScheme::LabelSkew { alpha: 1e6 }, 13).unwrap();
        for s in &shards {
            let (neg, pos) = s.data.class_counts();
            let frac = pos as f64 / (pos + neg) as f64;
            assert!((frac - 0.4).abs() < 0.03, "pos fraction {frac}");
        }
        assert_eq!(recovered_indices(&shards), (0..1200).collect::<Vec<_>>());
    }

    #[test]
    fn low_concentration_skew_actually_skews() {
        let fm = tagged_matrix(1200, 480);
        let shards = partition(&fm, 4, &PartitionScheme::LabelSkew { alpha: 0.1 }, 13).unwrap();
        let fracs: Vec<f64> = shards
            .iter()
            .map(|s| {
                let (neg, pos) = s.data.class_counts();
                pos as f64 / (pos + neg) as f64
            })
            .collect();
        assert!(
            fracs.iter().any(|f| (f - 0.4).abs() > 0.15),
            "no client deviates from the global mix: {fracs:?}"
        );
        for s in &shards {
            assert!(s.n_rows() >= 1);
        }
        assert_eq!(recovered_indices(&shards), (0..1200).collect::<Vec<_>>());
    }

    #[test]
    fn degenerate_requests_are_rejected() {
        let fm = tagged_matrix(5, 2);
        assert!(matches!(
            partition(&fm, 0, &PartitionScheme::Iid, 1),
            Err(FedError::Config(_))
        ));
        assert!(matches!(
            partition(&fm, 6, &PartitionScheme::Iid, 1),
            Err(FedError::Partition(_))
        ));
        for alpha in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                partition(&fm, 2, &PartitionScheme::LabelSkew { alpha }, 1),
                Err(FedError::Config(_))
            ));
        }
    }

    #[test]
    fn every_shard_gets_a_row_even_under_extreme_skew() {
        let fm = tagged_matrix(12, 6);
        let shards = partition(&fm, 12, &PartitionScheme::LabelSkew { alpha: 0.01 }, 99).unwrap();
        assert_eq!(shards.len(), 12);
        for s in &shards {
            assert_eq!(s.n_rows(), 1);
        }
        assert_eq!(recovered_indices(&shards), (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn largest_remainder_apportions_exactly() {
        assert_eq!(largest_remainder(&[0.5, 0.5], 5), vec![3, 2]);
        assert_eq!(largest_remainder(&[0.2, 0.3, 0.5], 10), vec![2, 3, 5]);
        assert_eq!(largest_remainder(&[1.0, 0.0], 4), vec![4, 0]);
        let counts = largest_remainder(&[0.33, 0.33, 0.34], 100);
        assert_eq!(counts.iter().sum::<usize>(), 100);
    }

    #[test]
    fn scheme_serde_round_trips() {
        for scheme in [
            PartitionScheme::Iid,
            PartitionScheme::LabelSkew { alpha: 0.5 },
        ] {
            let json = serde_json::to_string(&scheme).unwrap();
            let back: PartitionScheme = serde_json::from_str(&json).unwrap();
            assert_eq!(back, scheme);
        }
        let s: PartitionScheme = serde_json::from_str("\"iid\"").unwrap();
        assert_eq!(s, PartitionScheme::Iid);
        let s: PartitionScheme = serde_json::from_str(r#"{"label_skew":{"alpha":0.3}}"#).unwrap();
        assert_eq!(s, PartitionScheme::LabelSkew { alpha: 0.3 });
    }
}
