//! End-to-end training on generated data: learns, validates, reproduces.

use edgeguard_model::{train, ArchDescriptor, FusedNet, TrainConfig};
use edgeguard_nn::rng::derive_seed;
use edgeguard_pipeline::split::carve_validation;
use edgeguard_pipeline::synth::{generate_matrix, SynthSpec};

fn dataset() -> (
    edgeguard_pipeline::FeatureMatrix,
    edgeguard_pipeline::FeatureMatrix,
) {
    let spec = SynthSpec {
        rows: 360,
        dim: 8,
        separation: 4.0,
        categorical: false,
        ..SynthSpec::default()
    };
    let fm = generate_matrix(&spec, 31).unwrap();
    carve_validation(&fm, 0.25, derive_seed(31, "val", 0)).unwrap()
}

fn cfg() -> TrainConfig {
    TrainConfig {
        epochs: 12,
        batch_size: 32,
        learning_rate: 0.005,
        patience: Some(4),
        seed: 13,
        ..TrainConfig::default()
    }
}

#[test]
fn well_separated_clusters_reach_high_validation_accuracy() {
    let (train_fm, val_fm) = dataset();
    let net: FusedNet<f64> = FusedNet::build(ArchDescriptor::toy(8), 1).unwrap();
    let (_, history) = train(net, &train_fm, Some(&val_fm), &cfg()).unwrap();
    assert!(!history.is_empty());
    let best = history
        .iter()
        .filter_map(|r| r.val_accuracy)
        .fold(0.0f64, f64::max);
    assert!(best >= 0.99, "best validation accuracy {best} below 0.99");
    // Losses must drop substantially from the first epoch.
    let first = history[0].train_loss;
    let last = history.last().unwrap().train_loss;
    assert!(
        last < first * 0.8,
        "train loss barely moved: {first} -> {last}"
    );
}

#[test]
fn training_is_reproducible_across_runs() {
    let (train_fm, val_fm) = dataset();
    let run = || {
        let net: FusedNet<f64> = FusedNet::build(ArchDescriptor::toy(8), 1).unwrap();
        train(net, &train_fm, Some(&val_fm), &cfg()).unwrap()
    };
    let (a, ha) = run();
    let (b, hb) = run();
    assert_eq!(ha, hb, "epoch records must match bit for bit");
    for ((na, ba), (_, bb)) in a.named_buffers().iter().zip(b.named_buffers().iter()) {
        let ba_bits: Vec<u64> = ba.iter().map(|v| v.to_bits()).collect();
        let bb_bits: Vec<u64> = bb.iter().map(|v| v.to_bits()).collect();
        assert_eq!(
            ba_bits, bb_bits,
            "buffer {na} differs between identical runs"
        );
    }
}

#[test]
fn restored_model_is_the_best_validation_epoch_not_the_last() {
    let (train_fm, val_fm) = dataset();
    // A hot learning rate makes late epochs wobble, so the best epoch is
    // unlikely to be the final one; the returned model must match the best.
    let hot = TrainConfig {
        epochs: 15,
        batch_size: 16,
        learning_rate: 0.05,
        patience: Some(3),
        seed: 21,
        ..TrainConfig::default()
    };
    let net: FusedNet<f64> = FusedNet::build(ArchDescriptor::toy(8), 2).unwrap();
    let (trained, history) = train(net, &train_fm, Some(&val_fm), &hot).unwrap();
    let best_loss = history
        .iter()
        .filter_map(|r| r.val_loss)
        .fold(f64::INFINITY, f64::min);

    // Recompute the validation loss of the returned model; it must equal the
    // minimum the history ever saw.
    let (vloss, _) =
        edgeguard_model::evaluate_model(&trained, &val_fm, hot.batch_size, hot.threshold).unwrap();
    assert!(
        (vloss - best_loss).abs() < 1e-12,
        "returned model scores {vloss}, best epoch scored {best_loss}"
    );
}
