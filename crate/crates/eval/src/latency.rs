use std::hint::black_box;
use std::time::Instant;

use edgeguard_model::FusedNet;
use edgeguard_nn::Tensor2;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

/// Benchmark shape. Batch size 1 is always measured (it is the headline
/// per-sample figure) even when absent from `batch_sizes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyConfig {
    pub repetitions: usize,
    pub batch_sizes: Vec<usize>,
    pub warmup_passes: usize,
    pub budget_ms: f64,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        LatencyConfig {
            repetitions: 30,
            batch_sizes: vec![1, 32, 256],
            warmup_passes: 3,
            budget_ms: 10.0,
        }
    }
}

impl LatencyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 5 {
            return Err(EvalError::Input(format!(
                "repetitions must be at least 5 for stable percentiles, got {}",
                self.repetitions
            )));
        }
        if self.warmup_passes < 3 {
            return Err(EvalError::Input(format!(
                "at least 3 warmup passes required, got {}",
                self.warmup_passes
            )));
        }
        if self.batch_sizes.is_empty() {
            return Err(EvalError::Input("batch_sizes is empty".into()));
        }
        if self.batch_sizes.contains(&0) {
            return Err(EvalError::Input("batch size 0 is invalid".into()));
        }
        if !(self.budget_ms.is_finite() && self.budget_ms > 0.0) {
            return Err(EvalError::Input(format!(
                "budget_ms must be positive and finite, got {}",
                self.budget_ms
            )));
        }
        Ok(())
    }
}

/// Per-sample timing statistics for one batch size, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchLatency {
    pub batch_size: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p99_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub budget_ms: f64,
    /// Mean per-sample latency at batch size 1.
    pub single_sample_mean_ms: f64,
    /// Whether the single-sample mean beats the budget.
    pub within_budget: bool,
    pub batches: Vec<BatchLatency>,
    /// Advisory only: set when two consecutive single-sample runs disagree
    /// by more than half, indicating the host machine is too noisy for the
    /// numbers to be quoted.
    pub stability_warning: Option<String>,
}

/// Times the inference path of `net` against rows drawn from `probe`.
///
/// The decoder never runs at inference; a model that still carries one is
/// benchmarked as its stripped clone so the measured path matches what would
/// be deployed. Warmup passes are excluded from every statistic. Timing is
/// inherently machine-dependent, so this is the one output exempt from
/// byte-level reproducibility.
pub fn latency_bench(
    net: &FusedNet<f64>,
    probe: &Tensor2<f64>,
    cfg: &LatencyConfig,
) -> Result<LatencyReport> {
    cfg.validate()?;
    if probe.rows() == 0 {
        return Err(EvalError::Input("probe matrix has no rows".into()));
    }
    let dim = net.arch().input_dim;
    if probe.cols() != dim {
        return Err(EvalError::Input(format!(
            "probe has {} columns but the model expects {dim}",
            probe.cols()
        )));
    }

    let stripped;
    let bench_net = if net.has_decoder() {
        let mut n = net.clone();
        n.strip_decoder();
        stripped = n;
        &stripped
    } else {
        net
    };

    let mut sizes = cfg.batch_sizes.clone();
    if !sizes.contains(&1) {
        sizes.push(1);
    }
    sizes.sort_unstable();
    sizes.dedup();

    let mut batches = Vec::with_capacity(sizes.len());
    let mut single_runs = Vec::new();
    for &b in &sizes {
        let batch = cycle_rows(probe, b);
        let mut times = time_passes(bench_net, &batch, cfg.warmup_passes, cfg.repetitions)?;
        if b == 1 {
            // Second run of the cheapest batch feeds the stability check.
            let again = time_passes(bench_net, &batch, 1, cfg.repetitions)?;
            single_runs = vec![mean(&times), mean(&again)];
        }
        times.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        batches.push(BatchLatency {
            batch_size: b,
            mean_ms: mean(&times),
            p50_ms: percentile(&times, 0.50),
            p99_ms: percentile(&times, 0.99),
        });
    }

    let single_sample_mean_ms = batches
        .iter()
        .find(|b| b.batch_size == 1)
        .map(|b| b.mean_ms)
        .unwrap();
    Ok(LatencyReport {
        budget_ms: cfg.budget_ms,
        single_sample_mean_ms,
        within_budget: single_sample_mean_ms < cfg.budget_ms,
        batches,
        stability_warning: stability_warning(single_runs[0], single_runs[1]),
    })
}

/// Builds a batch of `b` rows by cycling through the probe rows.
fn cycle_rows(probe: &Tensor2<f64>, b: usize) -> Tensor2<f64> {
    let mut batch = Tensor2::zeros(b, probe.cols());
    for i in 0..b {
        batch
            .row_mut(i)
            .copy_from_slice(probe.row(i % probe.rows()));
    }
    batch
}

/// Runs warmup then timed passes; returns per-sample milliseconds per pass.
fn time_passes(
    net: &FusedNet<f64>,
    batch: &Tensor2<f64>,
    warmup: usize,
    reps: usize,
) -> Result<Vec<f64>> {
    for _ in 0..warmup {
        black_box(net.forward_infer(batch)?);
    }
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        black_box(net.forward_infer(batch)?);
        times.push(start.elapsed().as_secs_f64() * 1e3 / batch.rows() as f64);
    }
    Ok(times)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Nearest-rank percentile over an ascending-sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Flags consecutive single-sample runs whose means differ by more than
/// half of the larger one.
fn stability_warning(a: f64, b: f64) -> Option<String> {
    let max = a.max(b);
    (max > 0.0 && (a - b).abs() > 0.5 * max).then(|| {
        format!(
            "consecutive single-sample runs disagree: {a:.4} ms vs {b:.4} ms; \
             treat these figures as indicative only"
        )
    })
}
