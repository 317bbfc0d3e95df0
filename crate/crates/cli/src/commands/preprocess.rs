use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use edgeguard_nn::rng::derive_seed;
use edgeguard_pipeline::raw::load_csv;
use edgeguard_pipeline::{run_preprocess, PreprocessAudit, RawDataset, Schema};

use crate::artifacts;
use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Ingests raw CSVs and writes the encoded matrices plus the fitted
/// transform and an audit of what the recipe did. The raw training source
/// resolves as: `--dataset` flag, then `data.train_csv`, then a synthetic
/// fixture generated from `data.synth`.
pub fn cmd_preprocess(cfg: &RunConfig, dataset: Option<&Path>) -> Result<PreprocessAudit> {
    cfg.validate()?;
    artifacts::ensure_out_dir(&cfg.out_dir)?;

    let schema = match &cfg.data.schema {
        Some(path) => Some(Schema::from_json(&artifacts::read_to_string(path)?)?),
        None => None,
    };

    let train_path = resolve_train_source(cfg, dataset)?;
    let train = load_raw(&train_path, schema.as_ref())?;
    let test = match &cfg.data.test_csv {
        Some(path) => Some(load_raw(path, schema.as_ref())?),
        None => None,
    };

    let out = run_preprocess(
        train,
        test,
        &cfg.pipeline,
        derive_seed(cfg.seed, "preprocess", 0),
    )?;

    out.train.save(&artifacts::train_matrix(&cfg.out_dir))?;
    out.test.save(&artifacts::test_matrix(&cfg.out_dir))?;
    artifacts::write_json(&artifacts::transform_spec(&cfg.out_dir), &out.spec)?;
    artifacts::write_json(&artifacts::preprocess_audit(&cfg.out_dir), &out.audit)?;
    artifacts::write_resolved_config(cfg, "preprocess")?;

    println!(
        "preprocess: {} train rows, {} test rows, {} features",
        out.train.n_rows(),
        out.test.n_rows(),
        out.train.n_features()
    );
    Ok(out.audit)
}

fn resolve_train_source(cfg: &RunConfig, dataset: Option<&Path>) -> Result<PathBuf> {
    if let Some(p) = dataset {
        return Ok(p.to_path_buf());
    }
    if let Some(p) = &cfg.data.train_csv {
        return Ok(p.clone());
    }
    if cfg.data.synth.is_some() {
        return super::synth::cmd_synth(cfg);
    }
    Err(CliError::Config(
        "no training data: set data.train_csv or data.synth, or pass --dataset".into(),
    ))
}

fn load_raw(path: &Path, schema: Option<&Schema>) -> Result<RawDataset> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    Ok(load_csv(BufReader::new(file), schema)?)
}
