use std::io::Write;

use edgeguard_nn::rng::{derive_seed, seeded_rng};
use edgeguard_nn::Tensor2f64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};
use crate::matrix::FeatureMatrix;

/// Two spherical unit-variance Gaussians in `dim` dimensions whose means sit
/// `separation` apart (Euclidean), so class overlap is tunable: larger
/// separation means an easier problem. Class counts are exact, not sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub rows: usize,
    pub dim: usize,
    pub separation: f64,
    pub pos_fraction: f64,
    /// Also emit a label-independent categorical column and per-row tags,
    /// so the full encoding path gets exercised.
    pub categorical: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            rows: 10_000,
            dim: 20,
            separation: 5.0,
            pos_fraction: 0.5,
            categorical: true,
        }
    }
}

const PROTO_VALUES: [&str; 3] = ["tcp", "udp", "icmp"];

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rows < 4 {
            return Err(PipelineError::Config(format!(
                "need at least 4 rows, got {}",
                self.rows
            )));
        }
        if self.dim == 0 {
            return Err(PipelineError::Config("dim must be positive".into()));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(PipelineError::Config(format!(
                "separation must be finite and non-negative, got {}",
                self.separation
            )));
        }
        if !(self.pos_fraction > 0.0 && self.pos_fraction < 1.0) {
            return Err(PipelineError::Config(format!(
                "pos_fraction must be in (0, 1), got {}",
                self.pos_fraction
            )));
        }
        Ok(())
    }

    pub fn n_positive(&self) -> usize {
        let n = (self.pos_fraction * self.rows as f64).round() as usize;
        n.clamp(2, self.rows - 2)
    }

    /// Per-dimension mean offset: each class sits at ±offset in every
    /// dimension, giving exactly `separation` between the two means.
    fn offset(&self) -> f64 {
        self.separation / (2.0 * (self.dim as f64).sqrt())
    }
}

/// Deterministic shuffled label sequence with exact class counts.
fn label_sequence(spec: &SynthSpec, seed: u64) -> Vec<u8> {
    let n_pos = spec.n_positive();
    let mut labels = vec![0u8; spec.rows - n_pos];
    labels.resize(spec.rows, 1u8);
    let mut rng = seeded_rng(derive_seed(seed, "synth-labels", 0));
    labels.shuffle(&mut rng);
    labels
}

/// Writes the fixture as CSV: `id`, `f00..`, optional `proto` noise column,
/// `attack_cat` tag, `label`.
pub fn generate_csv<W: Write>(spec: &SynthSpec, seed: u64, mut w: W) -> Result<()> {
    spec.validate()?;
    let labels = label_sequence(spec, seed);
    let mut rng = seeded_rng(derive_seed(seed, "synth-features", 0));
    let off = spec.offset();

    let mut header = String::from("id");
    for j in 0..spec.dim {
        header.push_str(&format!(",f{j:02}"));
    }
    if spec.categorical {
        header.push_str(",proto");
    }
    header.push_str(",attack_cat,label");
    writeln!(w, "{header}")?;

    for (i, &y) in labels.iter().enumerate() {
        let mean = if y == 1 { off } else { -off };
        let mut line = format!("{}", i + 1);
        for _ in 0..spec.dim {
            let z: f64 = rng.sample(StandardNormal);
            line.push_str(&format!(",{}", mean + z));
        }
        if spec.categorical {
            let p = PROTO_VALUES[rng.random_range(0..PROTO_VALUES.len())];
            line.push_str(&format!(",{p}"));
        }
        let tag = if y == 1 { "generic" } else { "normal" };
        line.push_str(&format!(",{tag},{y}"));
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Generates the fixture directly as an encoded matrix (features are the
/// raw Gaussian draws), bypassing CSV and the transform. Useful for tests
/// that need labeled vectors without the preprocessing recipe.
pub fn generate_matrix(spec: &SynthSpec, seed: u64) -> Result<FeatureMatrix> {
    spec.validate()?;
    let labels = label_sequence(spec, seed);
    let mut rng = seeded_rng(derive_seed(seed, "synth-features", 0));
    let off = spec.offset();
    let mut x = Tensor2f64::zeros(spec.rows, spec.dim);
    for (i, &y) in labels.iter().enumerate() {
        let mean = if y == 1 { off } else { -off };
        for j in 0..spec.dim {
            let z: f64 = rng.sample(StandardNormal);
            x.set(i, j, mean + z);
        }
    }
    let names = (0..spec.dim).map(|j| format!("f{j:02}")).collect();
    FeatureMatrix::new(x, labels, names)
}
