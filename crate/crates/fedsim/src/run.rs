use edgeguard_model::{evaluate_model, EpochRecord, FusedNet, TrainConfig};
use edgeguard_nn::rng::{derive_seed, seeded_rng};
use edgeguard_pipeline::FeatureMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FedError, Result};
use crate::partition::{partition, ClientShard, PartitionScheme};
use crate::round::{aggregate, local_update, ClientUpdate};

/// Full simulation settings. `train` supplies the per-client optimizer
/// hyperparameters; its `epochs`, `patience`, and `seed` fields are ignored
/// because the schedule fixes them per participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FedConfig {
    pub n_clients: usize,
    pub scheme: PartitionScheme,
    pub rounds: usize,
    /// Clients sampled per round; absent means every client participates.
    pub clients_per_round: Option<usize>,
    pub local_epochs: usize,
    pub seed: u64,
    pub train: TrainConfig,
}

impl Default for FedConfig {
    fn default() -> Self {
        FedConfig {
            n_clients: 4,
            scheme: PartitionScheme::Iid,
            rounds: 10,
            clients_per_round: None,
            local_epochs: 2,
            seed: 42,
            train: TrainConfig::default(),
        }
    }
}

impl FedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_clients == 0 {
            return Err(FedError::Config("n_clients must be at least 1".into()));
        }
        if self.rounds == 0 {
            return Err(FedError::Config("rounds must be at least 1".into()));
        }
        if let Some(k) = self.clients_per_round {
            if k == 0 || k > self.n_clients {
                return Err(FedError::Config(format!(
                    "clients_per_round {k} outside 1..={}",
                    self.n_clients
                )));
            }
        }
        self.train.validate()?;
        Ok(())
    }
}

/// A client that was sampled but contributed nothing this round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradedClient {
    pub client_id: usize,
    pub error: String,
}

/// Summary a client is allowed to report: loss and accuracy aggregates over
/// its private data, never the data itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMetrics {
    pub client_id: usize,
    pub n_rows: usize,
    pub train_loss: Option<f64>,
    pub train_accuracy: Option<f64>,
}

/// One aggregation round as it appears in the transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based, contiguous.
    pub round: usize,
    pub participants: Vec<usize>,
    pub locals: Vec<LocalMetrics>,
    pub degraded: Vec<DegradedClient>,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
    /// Parameter bytes moved this round: one download per sampled client
    /// plus one upload per client that finished.
    pub bytes_exchanged: u64,
}

/// Partitions `fm` per the config, then runs the aggregation schedule.
pub fn simulate(
    fm: &FeatureMatrix,
    val: Option<&FeatureMatrix>,
    global: FusedNet<f64>,
    cfg: &FedConfig,
) -> Result<(FusedNet<f64>, Vec<RoundRecord>)> {
    cfg.validate()?;
    let shards = partition(
        fm,
        cfg.n_clients,
        &cfg.scheme,
        derive_seed(cfg.seed, "partition", 0),
    )?;
    run_rounds(&shards, val, global, cfg)
}

/// Runs the round schedule over pre-built shards.
///
/// Each round samples clients without replacement from a round-specific
/// stream, trains each on its shard, and aggregates whoever finished; a
/// client whose local pass fails is recorded as degraded and skipped. The
/// round index (0-based) and client id fully determine a participant's seed,
/// so a transcript is reproducible from the config alone.
pub fn run_rounds(
    shards: &[ClientShard],
    val: Option<&FeatureMatrix>,
    mut global: FusedNet<f64>,
    cfg: &FedConfig,
) -> Result<(FusedNet<f64>, Vec<RoundRecord>)> {
    cfg.validate()?;
    if shards.is_empty() {
        return Err(FedError::Config("no client shards".into()));
    }
    let mut ids: Vec<usize> = shards.iter().map(|s| s.client_id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(FedError::Config("duplicate client ids in shards".into()));
    }
    if !global.has_decoder() {
        return Err(FedError::Config(
            "global model must carry its decoder during training".into(),
        ));
    }
    let dim = global.arch().input_dim;
    for s in shards {
        if s.data.n_features() != dim {
            return Err(FedError::Config(format!(
                "client {} has {} features but the model expects {dim}",
                s.client_id,
                s.data.n_features()
            )));
        }
    }
    let k = cfg.clients_per_round.unwrap_or(shards.len());
    if k > shards.len() {
        return Err(FedError::Config(format!(
            "clients_per_round {k} exceeds the {} shards",
            shards.len()
        )));
    }

    let param_bytes = 8 * global.param_count() as u64;
    let mut records = Vec::with_capacity(cfg.rounds);
    for r in 0..cfg.rounds {
        let mut rng = seeded_rng(derive_seed(cfg.seed, "sample", r as u64));
        let mut chosen: Vec<usize> = rand::seq::index::sample(&mut rng, shards.len(), k).into_vec();
        chosen.sort_unstable();

        let mut updates: Vec<ClientUpdate> = Vec::with_capacity(k);
        let mut locals = Vec::with_capacity(k);
        let mut degraded = Vec::new();
        for &pos in &chosen {
            let shard = &shards[pos];
            match local_update(shard, &global, r, cfg.local_epochs, &cfg.train, cfg.seed) {
                Ok((update, history)) => {
                    locals.push(local_metrics(shard, &history));
                    updates.push(update);
                }
                Err(e) => degraded.push(DegradedClient {
                    client_id: shard.client_id,
                    error: e.to_string(),
                }),
            }
        }
        if updates.is_empty() {
            return Err(FedError::Protocol(format!(
                "round {}: every sampled client failed",
                r + 1
            )));
        }
        let bytes_exchanged = param_bytes * (chosen.len() + updates.len()) as u64;
        global = aggregate(updates)?;

        let (val_loss, val_accuracy) = match val {
            Some(v) => {
                let (loss, counts) =
                    evaluate_model(&global, v, cfg.train.batch_size, cfg.train.threshold)?;
                (Some(loss), Some(counts.accuracy()))
            }
            None => (None, None),
        };
        records.push(RoundRecord {
            round: r + 1,
            participants: chosen.iter().map(|&p| shards[p].client_id).collect(),
            locals,
            degraded,
            val_loss,
            val_accuracy,
            bytes_exchanged,
        });
    }
    Ok((global, records))
}

fn local_metrics(shard: &ClientShard, history: &[EpochRecord]) -> LocalMetrics {
    LocalMetrics {
        client_id: shard.client_id,
        n_rows: shard.data.n_rows(),
        train_loss: history.last().map(|e| e.train_loss),
        train_accuracy: history.last().map(|e| e.train_accuracy),
    }
}
