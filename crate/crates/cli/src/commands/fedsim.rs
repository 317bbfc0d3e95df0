use std::path::Path;

use edgeguard_fedsim::{simulate, FedConfig};
use edgeguard_model::{save_model, FusedNet};
use edgeguard_nn::rng::derive_seed;

use crate::artifacts;
use crate::commands::train::{load_matrix, split_validation};
use crate::config::RunConfig;
use crate::error::Result;

/// Runs the federated simulation over the preprocessed training matrix.
///
/// Initialization and per-participant seeding share the derivation used by
/// `train`, so a one-client, one-round simulation with matching local
/// epochs writes a global model byte-identical to the centralized one.
pub fn cmd_fedsim(cfg: &RunConfig, dataset: Option<&Path>) -> Result<()> {
    cfg.validate()?;
    artifacts::ensure_out_dir(&cfg.out_dir)?;

    let source = dataset
        .map(Path::to_path_buf)
        .unwrap_or_else(|| artifacts::train_matrix(&cfg.out_dir));
    let full = load_matrix(&source)?;

    let (train_fm, val_fm) = split_validation(cfg, &full)?;
    if let Some(v) = &val_fm {
        v.save(&artifacts::val_matrix(&cfg.out_dir))?;
    }

    let arch = cfg.arch.descriptor(train_fm.n_features());
    let init: FusedNet<f64> = FusedNet::build(arch, derive_seed(cfg.seed, "init", 0))?;

    let fed = FedConfig {
        n_clients: cfg.fed.n_clients,
        scheme: cfg.fed.scheme,
        rounds: cfg.fed.rounds,
        clients_per_round: cfg.fed.clients_per_round,
        local_epochs: cfg.fed.local_epochs,
        seed: cfg.seed,
        train: cfg.train.clone(),
    };

    let (global, records) = simulate(&train_fm, val_fm.as_ref(), init, &fed)?;

    save_model(&global, &artifacts::global_model_bin(&cfg.out_dir))?;
    artifacts::write_jsonl(&artifacts::rounds_jsonl(&cfg.out_dir), &records)?;
    artifacts::write_resolved_config(cfg, "fedsim")?;

    match records.last() {
        Some(r) => println!(
            "fedsim: {} rounds over {} clients, final val accuracy {}",
            records.len(),
            cfg.fed.n_clients,
            r.val_accuracy
                .map_or_else(|| "n/a".into(), |a| format!("{a:.4}"))
        ),
        None => println!("fedsim: 0 rounds, saved initial global model"),
    }
    Ok(())
}
