use std::fs;
use std::path::{Path, PathBuf};

use edgeguard_eval::{LatencyConfig, ThresholdObjective, ThresholdProfile};
use edgeguard_fedsim::PartitionScheme;
use edgeguard_model::{ArchDescriptor, TrainConfig};
use edgeguard_pipeline::synth::SynthSpec;
use edgeguard_pipeline::PipelineOptions;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Architecture preset, resolved to a concrete descriptor once the feature
/// width is known (after preprocessing).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchPreset {
    /// Full-size fused detector.
    Standard,
    /// Shrunk variant for smoke tests and small fixtures.
    Toy,
}

impl ArchPreset {
    pub fn descriptor(self, input_dim: usize) -> ArchDescriptor {
        match self {
            ArchPreset::Standard => ArchDescriptor::standard(input_dim),
            ArchPreset::Toy => ArchDescriptor::toy(input_dim),
        }
    }
}

/// Where raw data comes from. Exactly one of `train_csv` or `synth` must be
/// set before `preprocess` can run; `test_csv` is optional and triggers the
/// pre-split ingestion path.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train_csv: Option<PathBuf>,
    pub test_csv: Option<PathBuf>,
    /// Column-role schema file; omitted means roles are inferred.
    pub schema: Option<PathBuf>,
    /// Synthetic fixture generated on demand when no CSV is given.
    pub synth: Option<SynthSpec>,
}

/// Federation shape. Seed and the per-client optimizer settings come from
/// the top-level `seed` and `train` sections so a one-client run is exactly
/// the centralized run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FedSection {
    pub n_clients: usize,
    pub scheme: PartitionScheme,
    pub rounds: usize,
    pub clients_per_round: Option<usize>,
    pub local_epochs: usize,
}

impl Default for FedSection {
    fn default() -> Self {
        FedSection {
            n_clients: 4,
            scheme: PartitionScheme::Iid,
            rounds: 10,
            clients_per_round: None,
            local_epochs: 2,
        }
    }
}

/// Scoring options. The decision threshold is resolved in priority order:
/// explicit `threshold`, then `profile` applied to the validation split,
/// then 0.5.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub profile: Option<ThresholdProfile>,
    pub threshold: Option<f64>,
    pub latency: LatencyConfig,
}

/// One configuration object for every subcommand. Stages read only their
/// own sections, so a single file can drive a whole pipeline run. The
/// `train.seed` field is ignored: all randomness derives from the top-level
/// `seed` so that runs are reproducible from one number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub pipeline: PipelineOptions,
    /// Fraction of the training matrix carved off for validation before
    /// training; 0 disables the split.
    pub val_fraction: f64,
    pub arch: ArchPreset,
    pub train: TrainConfig,
    pub fed: FedSection,
    pub eval: EvalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out_dir: PathBuf::from("edgeguard_out"),
            data: DataConfig::default(),
            pipeline: PipelineOptions::default(),
            val_fraction: 0.2,
            arch: ArchPreset::Standard,
            train: TrainConfig::default(),
            fed: FedSection::default(),
            eval: EvalSection::default(),
        }
    }
}

impl RunConfig {
    /// Reads a config file, or yields the defaults when no path is given.
    /// Unknown keys are rejected so typos fail loudly instead of silently
    /// reverting to defaults.
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.val_fraction.is_finite() || self.val_fraction < 0.0 || self.val_fraction >= 1.0 {
            return Err(CliError::Config(format!(
                "val_fraction must be in [0, 1), got {}",
                self.val_fraction
            )));
        }
        if let Some(t) = self.eval.threshold {
            if !t.is_finite() || t <= 0.0 || t >= 1.0 {
                return Err(CliError::Config(format!(
                    "eval.threshold must be in (0, 1), got {t}"
                )));
            }
        }
        if let Some(p) = &self.eval.profile {
            p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        self.eval
            .latency
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    /// The exact JSON written as `resolved_config_<stage>.json`, after all
    /// flag overrides. Hashing this text gives the provenance fingerprint.
    pub fn resolved_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Runtime(format!("cannot serialize config: {e}")))?;
        text.push('\n');
        Ok(text)
    }

    pub fn sha256(&self) -> Result<String> {
        Ok(sha256_hex(self.resolved_json()?.as_bytes()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Command-line overrides; every field wins over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub profile: Option<String>,
}

impl RunConfig {
    pub fn apply(&mut self, ov: &Overrides) -> Result<()> {
        if let Some(seed) = ov.seed {
            self.seed = seed;
        }
        if let Some(out) = &ov.out {
            self.out_dir = out.clone();
        }
        if let Some(spec) = &ov.profile {
            // A profile given on the command line also displaces any fixed
            // threshold from the file; flags win outright.
            self.eval.profile = Some(parse_profile(spec)?);
            self.eval.threshold = None;
        }
        Ok(())
    }
}

/// Parses `--profile` values: `balanced`, `fpr:<bound>`, or `recall:<bound>`.
pub fn parse_profile(spec: &str) -> Result<ThresholdProfile> {
    let objective = match spec.split_once(':') {
        None if spec == "balanced" => ThresholdObjective::MaxF1,
        Some(("fpr", v)) => ThresholdObjective::FprBound(parse_bound(spec, v)?),
        Some(("recall", v)) => ThresholdObjective::RecallBound(parse_bound(spec, v)?),
        _ => {
            return Err(CliError::Config(format!(
                "unknown profile '{spec}': expected balanced, fpr:<bound>, or recall:<bound>"
            )))
        }
    };
    let profile = ThresholdProfile {
        name: spec.to_string(),
        objective,
    };
    profile
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(profile)
}

fn parse_bound(spec: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| CliError::Config(format!("profile '{spec}': bound is not a number")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_and_hash_is_stable() {
        let cfg = RunConfig::default();
        let json = cfg.resolved_json().unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.sha256().unwrap(), cfg.sha256().unwrap());
        assert_eq!(cfg.sha256().unwrap().len(), 64);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"seeed": 1}"#).unwrap_err();
        assert!(err.to_string().contains("seeed"));
    }

    #[test]
    fn overrides_win() {
        let mut cfg = RunConfig {
            eval: EvalSection {
                threshold: Some(0.7),
                ..Default::default()
            },
            ..Default::default()
        };
        let ov = Overrides {
            seed: Some(9),
            out: Some(PathBuf::from("elsewhere")),
            profile: Some("fpr:0.02".into()),
        };
        cfg.apply(&ov).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.out_dir, PathBuf::from("elsewhere"));
        assert_eq!(cfg.eval.threshold, None);
        let p = cfg.eval.profile.unwrap();
        assert_eq!(p.name, "fpr:0.02");
        assert_eq!(p.objective, ThresholdObjective::FprBound(0.02));
    }

    #[test]
    fn profile_parsing() {
        assert_eq!(
            parse_profile("balanced").unwrap().objective,
            ThresholdObjective::MaxF1
        );
        assert_eq!(
            parse_profile("recall:0.95").unwrap().objective,
            ThresholdObjective::RecallBound(0.95)
        );
        assert!(parse_profile("fpr:banana").is_err());
        assert!(parse_profile("fpr:1.5").is_err());
        assert!(parse_profile("tight").is_err());
    }

    #[test]
    fn validate_rejects_bad_ranges() {
        let bad_fraction = RunConfig {
            val_fraction: 1.0,
            ..Default::default()
        };
        assert!(bad_fraction.validate().is_err());

        let with_threshold = |t: f64| RunConfig {
            eval: EvalSection {
                threshold: Some(t),
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(with_threshold(0.0).validate().is_err());
        assert!(with_threshold(0.5).validate().is_ok());
    }
}
