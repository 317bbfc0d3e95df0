use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use edgeguard_nn::rng::derive_seed;
use edgeguard_pipeline::synth::generate_csv;

use crate::artifacts;
use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Writes the configured synthetic fixture as a raw CSV, the same shape the
/// ingestion path expects from real capture exports.
pub fn cmd_synth(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let spec = cfg
        .data
        .synth
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no data.synth section".into()))?;

    artifacts::ensure_out_dir(&cfg.out_dir)?;
    artifacts::write_resolved_config(cfg, "synth")?;

    let path = artifacts::synth_csv(&cfg.out_dir);
    let file = File::create(&path)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))?;
    generate_csv(
        spec,
        derive_seed(cfg.seed, "synth", 0),
        BufWriter::new(file),
    )?;

    println!(
        "synth: wrote {} ({} rows, {} features)",
        path.display(),
        spec.rows,
        spec.dim
    );
    Ok(path)
}
