use std::path::{Path, PathBuf};

use edgeguard_eval::{build_report, select_threshold, write_roc_csv, EvalReport, ThresholdProfile};
use edgeguard_model::{load_model, FusedNet};
use edgeguard_nn::Tensor2;
use edgeguard_pipeline::FeatureMatrix;

use crate::artifacts;
use crate::commands::train::load_matrix;
use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Scores a held-out matrix and writes the metrics report and ROC curve.
///
/// Latency is measured by `bench`, not here, so the report is byte-stable
/// across reruns of the same config and seed.
pub fn cmd_evaluate(
    cfg: &RunConfig,
    model_path: Option<&Path>,
    dataset: Option<&Path>,
) -> Result<EvalReport> {
    cfg.validate()?;
    artifacts::ensure_out_dir(&cfg.out_dir)?;

    let model_file = resolve_model_path(cfg, model_path)?;
    let net: FusedNet<f64> = load_model(&model_file)?;

    let data_file = dataset
        .map(Path::to_path_buf)
        .unwrap_or_else(|| artifacts::test_matrix(&cfg.out_dir));
    let fm = load_matrix(&data_file)?;

    if net.arch().input_dim != fm.n_features() {
        return Err(CliError::Data(format!(
            "feature dimension mismatch: model at {} expects {} features, dataset {} provides {}",
            model_file.display(),
            net.arch().input_dim,
            fm.n_features(),
            data_file.display()
        )));
    }

    let scores = score_matrix(&net, &fm.x)?;
    let (threshold, profile) = resolve_threshold(cfg, &net)?;

    let config_sha256 = artifacts::write_resolved_config(cfg, "evaluate")?;
    let report = build_report(
        &fm.y,
        &scores,
        threshold,
        profile,
        None,
        &data_file.display().to_string(),
        &config_sha256,
    )?;

    artifacts::write_json(&artifacts::eval_report(&cfg.out_dir), &report)?;
    let roc_path = artifacts::roc_csv(&cfg.out_dir);
    let roc_file = std::fs::File::create(&roc_path)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", roc_path.display())))?;
    write_roc_csv(&report.roc, std::io::BufWriter::new(roc_file))?;

    println!(
        "evaluate: {} rows, threshold {:.4}, accuracy {:.4}, auc {:.4}",
        fm.n_rows(),
        report.threshold,
        report.metrics.accuracy,
        report.auc
    );
    Ok(report)
}

/// Inference scores for every row, decoder left out of the pass.
pub fn score_matrix(net: &FusedNet<f64>, x: &Tensor2<f64>) -> Result<Vec<f64>> {
    let mut lean = net.clone();
    lean.strip_decoder();
    let mut scores = Vec::with_capacity(x.rows());
    // Chunked so peak memory stays flat on large matrices.
    let chunk = 512;
    let cols = x.cols();
    let mut start = 0;
    while start < x.rows() {
        let end = (start + chunk).min(x.rows());
        let rows = end - start;
        let slice = x.data()[start * cols..end * cols].to_vec();
        let batch =
            Tensor2::from_vec(rows, cols, slice).map_err(edgeguard_model::ModelError::Nn)?;
        scores.extend(lean.forward_infer(&batch)?);
        start = end;
    }
    Ok(scores)
}

pub(crate) fn resolve_model_path(cfg: &RunConfig, flag: Option<&Path>) -> Result<PathBuf> {
    if let Some(p) = flag {
        return Ok(p.to_path_buf());
    }
    let central = artifacts::model_bin(&cfg.out_dir);
    if central.exists() {
        return Ok(central);
    }
    let global = artifacts::global_model_bin(&cfg.out_dir);
    if global.exists() {
        return Ok(global);
    }
    Err(CliError::Data(format!(
        "no model at {} or {}: train first or pass --model",
        central.display(),
        global.display()
    )))
}

/// Threshold priority: explicit value, then profile applied to the
/// validation split, then 0.5.
fn resolve_threshold(
    cfg: &RunConfig,
    net: &FusedNet<f64>,
) -> Result<(f64, Option<ThresholdProfile>)> {
    if let Some(t) = cfg.eval.threshold {
        return Ok((t, None));
    }
    let Some(profile) = cfg.eval.profile.clone() else {
        return Ok((0.5, None));
    };

    let val_path = artifacts::val_matrix(&cfg.out_dir);
    if !val_path.exists() {
        return Err(CliError::Data(format!(
            "threshold profile '{}' needs {} from a training run with val_fraction > 0; \
             set eval.threshold instead",
            profile.name,
            val_path.display()
        )));
    }
    let val = FeatureMatrix::load(&val_path)?;
    if net.arch().input_dim != val.n_features() {
        return Err(CliError::Data(format!(
            "feature dimension mismatch: model expects {} features, validation split {} provides {}",
            net.arch().input_dim,
            val_path.display(),
            val.n_features()
        )));
    }
    let val_scores = score_matrix(net, &val.x)?;
    let threshold = select_threshold(&val.y, &val_scores, &profile)?;
    Ok((threshold, Some(profile)))
}
