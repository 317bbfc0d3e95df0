//! Disk persistence of trained models, deployment stripping included.

use edgeguard_model::{
    load_model, save_model, train, ArchDescriptor, FusedNet, ModelError, TrainConfig,
};
use edgeguard_nn::rng::seeded_rng;
use edgeguard_nn::Tensor2;
use edgeguard_pipeline::synth::{generate_matrix, SynthSpec};
use rand::Rng;

fn trained_model() -> FusedNet<f64> {
    let spec = SynthSpec {
        rows: 120,
        dim: 8,
        separation: 4.0,
        categorical: false,
        ..SynthSpec::default()
    };
    let fm = generate_matrix(&spec, 9).unwrap();
    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 32,
        patience: None,
        seed: 15,
        ..TrainConfig::default()
    };
    let net: FusedNet<f64> = FusedNet::build(ArchDescriptor::toy(8), 4).unwrap();
    train(net, &fm, None, &cfg).unwrap().0
}

fn probe_batch() -> Tensor2<f64> {
    let mut rng = seeded_rng(6);
    let data = (0..10 * 8)
        .map(|_| rng.random::<f64>() * 2.0 - 1.0)
        .collect();
    Tensor2::from_vec(10, 8, data).unwrap()
}

#[test]
fn trained_model_survives_disk_roundtrip_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bin");
    let net = trained_model();
    save_model(&net, &path).unwrap();
    let reloaded: FusedNet<f64> = load_model(&path).unwrap();

    let x = probe_batch();
    let before = net.forward_infer(&x).unwrap();
    let after = reloaded.forward_infer(&x).unwrap();
    let before_bits: Vec<u64> = before.iter().map(|v| v.to_bits()).collect();
    let after_bits: Vec<u64> = after.iter().map(|v| v.to_bits()).collect();
    assert_eq!(before_bits, after_bits);

    // Saving the reloaded model reproduces the file exactly.
    let second = dir.path().join("model2.bin");
    save_model(&reloaded, &second).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&second).unwrap()
    );
}

#[test]
fn stripped_deployment_file_is_smaller_and_serves_identical_scores() {
    let dir = tempfile::tempdir().unwrap();
    let full_path = dir.path().join("full.bin");
    let lean_path = dir.path().join("lean.bin");

    let net = trained_model();
    save_model(&net, &full_path).unwrap();
    let mut lean = net.clone();
    lean.strip_decoder();
    save_model(&lean, &lean_path).unwrap();

    let full_len = std::fs::metadata(&full_path).unwrap().len();
    let lean_len = std::fs::metadata(&lean_path).unwrap().len();
    assert!(lean_len < full_len, "stripping must shrink the file");

    let reloaded: FusedNet<f64> = load_model(&lean_path).unwrap();
    assert!(!reloaded.has_decoder());
    let x = probe_batch();
    assert_eq!(
        net.forward_infer(&x).unwrap(),
        reloaded.forward_infer(&x).unwrap()
    );
    // A stripped model cannot resume training.
    let spec = SynthSpec {
        rows: 16,
        dim: 8,
        separation: 4.0,
        categorical: false,
        ..SynthSpec::default()
    };
    let fm = generate_matrix(&spec, 10).unwrap();
    let err = train(reloaded, &fm, None, &TrainConfig::default()).unwrap_err();
    assert!(matches!(err, ModelError::Arch(_)));
}

#[test]
fn missing_file_surfaces_io_error() {
    let err = load_model::<f64>(std::path::Path::new("/nonexistent/model.bin")).unwrap_err();
    assert!(matches!(err, ModelError::Io(_)));
}
