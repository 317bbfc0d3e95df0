use edgeguard_model::{train, EpochRecord, FusedNet, TrainConfig};
use edgeguard_nn::rng::derive_seed;

use crate::error::{FedError, Result};
use crate::partition::ClientShard;

/// The seed a given client uses in a given round. Both coordinates feed a
/// nested derivation so streams never collide across rounds or clients, and
/// a centralized run can reproduce the (round 0, client 0) stream exactly.
pub fn participant_seed(root: u64, round: usize, client: usize) -> u64 {
    derive_seed(
        derive_seed(root, "round", round as u64),
        "client",
        client as u64,
    )
}

/// What a client sends back: new parameters and its sample count. No raw
/// rows, labels, or gradients ever leave the client.
#[derive(Debug, Clone)]
pub struct ClientUpdate {
    pub client_id: usize,
    pub params: FusedNet<f64>,
    pub n_rows: usize,
}

/// Trains a copy of the global model on one client's shard.
///
/// Base hyperparameters come from `base`; the epoch count, the seed, and
/// early stopping are overridden here because a local pass has a fixed
/// length and no validation split. Zero local epochs returns the global
/// parameters untouched. The returned history holds only loss and accuracy
/// aggregates, never shard rows.
pub fn local_update(
    shard: &ClientShard,
    global: &FusedNet<f64>,
    round: usize,
    local_epochs: usize,
    base: &TrainConfig,
    root_seed: u64,
) -> Result<(ClientUpdate, Vec<EpochRecord>)> {
    let cfg = TrainConfig {
        epochs: local_epochs,
        patience: None,
        seed: participant_seed(root_seed, round, shard.client_id),
        ..base.clone()
    };
    let (params, history) = train(global.clone(), &shard.data, None, &cfg)?;
    Ok((
        ClientUpdate {
            client_id: shard.client_id,
            params,
            n_rows: shard.data.n_rows(),
        },
        history,
    ))
}

/// Sample-count-weighted federated average.
///
/// A single update passes through bit-identical (no arithmetic touches it).
/// Multiple updates are summed in ascending client order, so the result is
/// independent of arrival order. Every aggregated value is a convex
/// combination of the client values.
pub fn aggregate(mut updates: Vec<ClientUpdate>) -> Result<FusedNet<f64>> {
    match updates.len() {
        0 => return Err(FedError::Protocol("nothing to aggregate".into())),
        1 => return Ok(updates.pop().unwrap().params),
        _ => {}
    }
    updates.sort_by_key(|u| u.client_id);
    if updates.windows(2).any(|w| w[0].client_id == w[1].client_id) {
        return Err(FedError::Protocol("duplicate client id in updates".into()));
    }
    if updates.iter().any(|u| u.n_rows == 0) {
        return Err(FedError::Protocol("client reported zero samples".into()));
    }
    let arch = updates[0].params.arch().clone();
    let with_decoder = updates[0].params.has_decoder();
    for u in &updates[1..] {
        if *u.params.arch() != arch || u.params.has_decoder() != with_decoder {
            return Err(FedError::Protocol(format!(
                "client {} parameters are not congruent with the cohort",
                u.client_id
            )));
        }
    }

    let total: usize = updates.iter().map(|u| u.n_rows).sum();
    let weights: Vec<f64> = updates
        .iter()
        .map(|u| u.n_rows as f64 / total as f64)
        .collect();
    let mut result = updates[0].params.clone();
    let views: Vec<Vec<(String, &[f64])>> =
        updates.iter().map(|u| u.params.named_buffers()).collect();
    for (slot, (name, out)) in result.named_buffers_mut().into_iter().enumerate() {
        for j in 0..out.len() {
            let mut acc = 0.0;
            for (k, w) in weights.iter().enumerate() {
                let (ref peer_name, peer) = views[k][slot];
                debug_assert_eq!(*peer_name, name);
                acc += w * peer[j];
            }
            out[j] = acc;
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use edgeguard_model::ArchDescriptor;

    fn constant_net(value: f64, seed: u64) -> FusedNet<f64> {
        let mut net = FusedNet::build(ArchDescriptor::toy(6), seed).unwrap();
        for (_, buf) in net.named_buffers_mut() {
            buf.fill(value);
        }
        net
    }

    fn update(client_id: usize, params: FusedNet<f64>, n_rows: usize) -> ClientUpdate {
        ClientUpdate {
            client_id,
            params,
            n_rows,
        }
    }

    #[test]
    fn participant_seeds_are_pairwise_distinct() {
        let seeds = [
            participant_seed(42, 0, 0),
            participant_seed(42, 0, 1),
            participant_seed(42, 1, 0),
            participant_seed(42, 1, 1),
            participant_seed(43, 0, 0),
        ];
        for i in 0..seeds.len() {
            for j in i + 1..seeds.len() {
                assert_ne!(seeds[i], seeds[j], "slots {i} and {j} collide");
            }
        }
    }

    #[test]
    fn weighted_mean_matches_the_hand_example() {
        // Values 2.0 (1 sample) and 4.0 (3 samples) average to exactly 3.5.
        let agg = aggregate(vec![
            update(0, constant_net(2.0, 1), 1),
            update(1, constant_net(4.0, 2), 3),
        ])
        .unwrap();
        for (name, buf) in agg.named_buffers() {
            for &v in buf {
                assert_eq!(v, 3.5, "buffer {name}");
            }
        }
    }

    #[test]
    fn single_update_is_bit_identical() {
        let net: FusedNet<f64> = FusedNet::build(ArchDescriptor::toy(6), 77).unwrap();
        let want: Vec<u64> = net
            .named_buffers()
            .iter()
            .flat_map(|(_, b)| b.iter().map(|v| v.to_bits()))
            .collect();
        let agg = aggregate(vec![update(3, net, 10)]).unwrap();
        let got: Vec<u64> = agg
            .named_buffers()
            .iter()
            .flat_map(|(_, b)| b.iter().map(|v| v.to_bits()))
            .collect();
        assert_eq!(want, got);
    }

    #[test]
    fn aggregation_is_order_independent() {
        let a: FusedNet<f64> = FusedNet::build(ArchDescriptor::toy(6), 1).unwrap();
        let b: FusedNet<f64> = FusedNet::build(ArchDescriptor::toy(6), 2).unwrap();
        let c: FusedNet<f64> = FusedNet::build(ArchDescriptor::toy(6), 3).unwrap();
        let forward = aggregate(vec![
            update(0, a.clone(), 5),
            update(1, b.clone(), 7),
            update(2, c.clone(), 3),
        ])
        .unwrap();
        let shuffled = aggregate(vec![update(2, c, 3), update(0, a, 5), update(1, b, 7)]).unwrap();
        let bits = |n: &FusedNet<f64>| -> Vec<u64> {
            n.named_buffers()
                .iter()
                .flat_map(|(_, b)| b.iter().map(|v| v.to_bits()))
                .collect()
        };
        assert_eq!(bits(&forward), bits(&shuffled));
    }

    #[test]
    fn aggregate_stays_inside_the_client_envelope() {
        let nets: Vec<FusedNet<f64>> = (0..3)
            .map(|s| FusedNet::build(ArchDescriptor::toy(6), 100 + s).unwrap())
            .collect();
        let agg = aggregate(
            nets.iter()
                .enumerate()
                .map(|(i, n)| update(i, n.clone(), 2 * i + 1))
                .collect(),
        )
        .unwrap();
        let peer_views: Vec<Vec<(String, &[f64])>> =
            nets.iter().map(|n| n.named_buffers()).collect();
        for (slot, (name, buf)) in agg.named_buffers().into_iter().enumerate() {
            for (j, &v) in buf.iter().enumerate() {
                let lo = peer_views
                    .iter()
                    .map(|p| p[slot].1[j])
                    .fold(f64::INFINITY, f64::min);
                let hi = peer_views
                    .iter()
                    .map(|p| p[slot].1[j])
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(
                    v >= lo - 1e-12 && v <= hi + 1e-12,
                    "{name}[{j}] = {v} outside [{lo}, {hi}]"
                );
            }
        }
    }

    #[test]
    fn malformed_cohorts_are_rejected() {
        assert!(matches!(aggregate(vec![]), Err(FedError::Protocol(_))));
        let a: FusedNet<f64> = FusedNet::build(ArchDescriptor::toy(6), 1).unwrap();
        let b: FusedNet<f64> = FusedNet::build(ArchDescriptor::toy(6), 2).unwrap();
        assert!(matches!(
            aggregate(vec![update(0, a.clone(), 1), update(0, b.clone(), 1)]),
            Err(FedError::Protocol(_))
        ));
        assert!(matches!(
            aggregate(vec![update(0, a.clone(), 0), update(1, b.clone(), 1)]),
            Err(FedError::Protocol(_))
        ));
        let other: FusedNet<f64> = FusedNet::build(ArchDescriptor::toy(8), 3).unwrap();
        assert!(matches!(
            aggregate(vec![update(0, a.clone(), 1), update(1, other, 1)]),
            Err(FedError::Protocol(_))
        ));
        let mut stripped = b.clone();
        stripped.strip_decoder();
        assert!(matches!(
            aggregate(vec![update(0, a, 1), update(1, stripped, 1)]),
            Err(FedError::Protocol(_))
        ));
    }
}
