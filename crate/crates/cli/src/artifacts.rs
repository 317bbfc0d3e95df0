use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub fn train_matrix(out: &Path) -> PathBuf {
    out.join("train.fm")
}
pub fn test_matrix(out: &Path) -> PathBuf {
    out.join("test.fm")
}
pub fn val_matrix(out: &Path) -> PathBuf {
    out.join("val.fm")
}
pub fn transform_spec(out: &Path) -> PathBuf {
    out.join("transform_spec.json")
}
pub fn preprocess_audit(out: &Path) -> PathBuf {
    out.join("preprocess_audit.json")
}
pub fn synth_csv(out: &Path) -> PathBuf {
    out.join("synth.csv")
}
pub fn model_bin(out: &Path) -> PathBuf {
    out.join("model.bin")
}
pub fn checkpoint_bin(out: &Path) -> PathBuf {
    out.join("model.checkpoint.bin")
}
pub fn history_jsonl(out: &Path) -> PathBuf {
    out.join("history.jsonl")
}
pub fn global_model_bin(out: &Path) -> PathBuf {
    out.join("global_model.bin")
}
pub fn rounds_jsonl(out: &Path) -> PathBuf {
    out.join("rounds.jsonl")
}
pub fn eval_report(out: &Path) -> PathBuf {
    out.join("eval_report.json")
}
pub fn roc_csv(out: &Path) -> PathBuf {
    out.join("roc.csv")
}
pub fn latency_json(out: &Path) -> PathBuf {
    out.join("latency.json")
}
pub fn resolved_config(out: &Path, stage: &str) -> PathBuf {
    out.join(format!("resolved_config_{stage}.json"))
}

pub fn ensure_out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", out.display())))
}

/// Writes the post-override config snapshot for a stage and returns its
/// SHA-256, the fingerprint echoed by downstream provenance blocks.
pub fn write_resolved_config(cfg: &RunConfig, stage: &str) -> Result<String> {
    let text = cfg.resolved_json()?;
    let path = resolved_config(&cfg.out_dir, stage);
    fs::write(&path, &text)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    cfg.sha256()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

/// One JSON object per line; the shape shared by epoch and round logs.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        let line = serde_json::to_string(r)
            .map_err(|e| CliError::Runtime(format!("cannot serialize {}: {e}", path.display())))?;
        text.push_str(&line);
        text.push('\n');
    }
    fs::write(path, text)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}
