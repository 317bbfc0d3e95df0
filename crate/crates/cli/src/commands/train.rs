use std::path::Path;

use edgeguard_fedsim::participant_seed;
use edgeguard_model::{save_model, train, EpochRecord, FusedNet, ModelError, TrainConfig};
use edgeguard_nn::rng::derive_seed;
use edgeguard_pipeline::split::carve_validation;
use edgeguard_pipeline::FeatureMatrix;

use crate::artifacts;
use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Trains the fused detector on the preprocessed training matrix.
///
/// A fresh run initializes from the architecture preset; `--resume` starts
/// from a saved model instead and continues the epoch numbering found in
/// `history.jsonl`. If training diverges the last finite parameters are
/// kept as `model.checkpoint.bin` and the run fails with a runtime error.
pub fn cmd_train(cfg: &RunConfig, dataset: Option<&Path>, resume: Option<&Path>) -> Result<()> {
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

    let (net, epoch_offset) = initial_net(cfg, resume, train_fm.n_features())?;

    // All training randomness descends from the top-level seed; round 0,
    // client 0 is the centralized run in federated coordinates.
    let tc = TrainConfig {
        seed: participant_seed(cfg.seed, 0, 0),
        ..cfg.train.clone()
    };

    match train(net, &train_fm, val_fm.as_ref(), &tc) {
        Ok((trained, history)) => {
            save_model(&trained, &artifacts::model_bin(&cfg.out_dir))?;
            write_history(cfg, &history, epoch_offset, resume.is_some())?;
            artifacts::write_resolved_config(cfg, "train")?;
            match history.last() {
                Some(rec) => println!(
                    "train: {} epochs, final loss {:.6}, accuracy {:.4}",
                    rec.epoch + epoch_offset,
                    rec.train_loss,
                    rec.train_accuracy
                ),
                None => println!("train: 0 epochs, saved initialized model"),
            }
            Ok(())
        }
        Err(ModelError::Diverged {
            epoch,
            message,
            last_good,
        }) => {
            let ckpt = artifacts::checkpoint_bin(&cfg.out_dir);
            save_model(last_good.as_ref(), &ckpt)?;
            artifacts::write_resolved_config(cfg, "train")?;
            Err(CliError::Runtime(format!(
                "training diverged at epoch {}: {message}; last finite parameters kept at {}",
                epoch + epoch_offset,
                ckpt.display()
            )))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn load_matrix(path: &Path) -> Result<FeatureMatrix> {
    if !path.exists() {
        return Err(CliError::Data(format!(
            "no feature matrix at {}: run preprocess first or pass --dataset",
            path.display()
        )));
    }
    Ok(FeatureMatrix::load(path)?)
}

/// Carves the validation split when configured. The carve seed depends only
/// on the run seed, so every stage sees the same split.
pub fn split_validation(
    cfg: &RunConfig,
    full: &FeatureMatrix,
) -> Result<(FeatureMatrix, Option<FeatureMatrix>)> {
    if cfg.val_fraction == 0.0 {
        return Ok((full.clone(), None));
    }
    let (tr, val) = carve_validation(full, cfg.val_fraction, derive_seed(cfg.seed, "val", 0))?;
    Ok((tr, Some(val)))
}

fn initial_net(
    cfg: &RunConfig,
    resume: Option<&Path>,
    width: usize,
) -> Result<(FusedNet<f64>, usize)> {
    let Some(path) = resume else {
        let arch = cfg.arch.descriptor(width);
        return Ok((FusedNet::build(arch, derive_seed(cfg.seed, "init", 0))?, 0));
    };

    let net: FusedNet<f64> = edgeguard_model::load_model(path)?;
    if net.arch().input_dim != width {
        return Err(CliError::Data(format!(
            "feature dimension mismatch: model at {} expects {} features, training data provides {}",
            path.display(),
            net.arch().input_dim,
            width
        )));
    }
    if !net.has_decoder() {
        return Err(CliError::Config(format!(
            "model at {} has no decoder and cannot be trained further",
            path.display()
        )));
    }
    let offset = prior_epochs(cfg)?;
    Ok((net, offset))
}

fn prior_epochs(cfg: &RunConfig) -> Result<usize> {
    let path = artifacts::history_jsonl(&cfg.out_dir);
    if !path.exists() {
        return Ok(0);
    }
    let text = artifacts::read_to_string(&path)?;
    Ok(text.lines().filter(|l| !l.trim().is_empty()).count())
}

fn write_history(
    cfg: &RunConfig,
    history: &[EpochRecord],
    offset: usize,
    resumed: bool,
) -> Result<()> {
    let shifted: Vec<EpochRecord> = history
        .iter()
        .map(|r| EpochRecord {
            epoch: r.epoch + offset,
            ..r.clone()
        })
        .collect();
    let path = artifacts::history_jsonl(&cfg.out_dir);
    if resumed && path.exists() {
        let mut text = artifacts::read_to_string(&path)?;
        for r in &shifted {
            let line = serde_json::to_string(r)
                .map_err(|e| CliError::Runtime(format!("cannot serialize history: {e}")))?;
            text.push_str(&line);
            text.push('\n');
        }
        std::fs::write(&path, text)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    } else {
        artifacts::write_jsonl(&path, &shifted)
    }
}
