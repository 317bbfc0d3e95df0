use std::path::Path;

use edgeguard_eval::{latency_bench, LatencyReport};
use edgeguard_model::{load_model, FusedNet};

use crate::artifacts;
use crate::commands::train::load_matrix;
use crate::config::RunConfig;
use crate::error::Result;

/// Measures inference latency of a saved model against real probe rows.
/// Timings vary run to run by nature; everything else in the output
/// directory stays deterministic.
pub fn cmd_bench(
    cfg: &RunConfig,
    model_path: Option<&Path>,
    dataset: Option<&Path>,
) -> Result<LatencyReport> {
    cfg.validate()?;
    artifacts::ensure_out_dir(&cfg.out_dir)?;

    let model_file = super::evaluate::resolve_model_path(cfg, model_path)?;
    let net: FusedNet<f64> = load_model(&model_file)?;

    let probe_file = dataset
        .map(Path::to_path_buf)
        .unwrap_or_else(|| artifacts::test_matrix(&cfg.out_dir));
    let probe = load_matrix(&probe_file)?;

    let report = latency_bench(&net, &probe.x, &cfg.eval.latency)?;

    artifacts::write_json(&artifacts::latency_json(&cfg.out_dir), &report)?;
    artifacts::write_resolved_config(cfg, "bench")?;

    println!(
        "bench: single-sample mean {:.4} ms ({} budget {:.1} ms)",
        report.single_sample_mean_ms,
        if report.within_budget {
            "within"
        } else {
            "OVER"
        },
        report.budget_ms
    );
    Ok(report)
}
