use edgeguard_nn::loss::composite_loss;
use edgeguard_nn::optim::{Adam, AdamConfig};
use edgeguard_nn::rng::{derive_seed, seeded_rng};
use edgeguard_nn::{NnError, Scalar, Tensor2};
use edgeguard_pipeline::FeatureMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::net::{FusedGrads, FusedNet};

/// Mini-batch training hyperparameters.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Upper bound on passes over the training set.
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Consecutive epochs without validation-loss improvement before
    /// training stops; `None` disables early stopping.
    pub patience: Option<usize>,
    /// Root seed for shuffling and dropout masks. Model initialization is
    /// seeded separately by the caller.
    pub seed: u64,
    /// Probability cutoff used only for the accuracy-style metrics in the
    /// epoch records.
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        TrainConfig {
            epochs: 50,
            batch_size: 256,
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            patience: Some(5),
            seed: 42,
            threshold: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(ModelError::Config("batch_size must be at least 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(ModelError::Config(format!(
                "threshold must lie strictly between 0 and 1, got {}",
                self.threshold
            )));
        }
        self.adam().validate().map_err(ModelError::Nn)
    }
}

/// One epoch of training history; serialized as one JSON line each.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Mean composite loss over training rows, measured with dropout active.
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub train_precision: f64,
    pub train_recall: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
    pub val_precision: Option<f64>,
    pub val_recall: Option<f64>,
}

/// Binary confusion counts at a fixed probability cutoff. A prediction is
/// positive when the probability is at or above the cutoff.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl BinaryCounts {
    fn add<F: Scalar>(&mut self, probs: &[F], targets: &[F], threshold: f64) {
        for (p, t) in probs.iter().zip(targets) {
            let pred = p.as_f64() >= threshold;
            let actual = t.as_f64() >= 0.5;
            match (pred, actual) {
                (true, true) => self.true_pos += 1,
                (true, false) => self.false_pos += 1,
                (false, true) => self.false_neg += 1,
                (false, false) => self.true_neg += 1,
            }
        }
    }

    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        (self.true_pos + self.true_neg) as f64 / self.total() as f64
    }

    /// Zero when no positive predictions were made.
    pub fn precision(&self) -> f64 {
        let denom = self.true_pos + self.false_pos;
        if denom == 0 {
            return 0.0;
        }
        self.true_pos as f64 / denom as f64
    }

    /// Zero when no positive rows exist.
    pub fn recall(&self) -> f64 {
        let denom = self.true_pos + self.false_neg;
        if denom == 0 {
            return 0.0;
        }
        self.true_pos as f64 / denom as f64
    }
}

/// Converts a feature matrix into the scalar type the network runs on.
fn matrix_tensor<F: Scalar>(fm: &FeatureMatrix) -> Result<Tensor2<F>> {
    let data = fm.x.data().iter().map(|&v| F::from_f64(v)).collect();
    Ok(Tensor2::from_vec(fm.n_rows(), fm.n_features(), data)?)
}

fn label_targets<F: Scalar>(fm: &FeatureMatrix) -> Vec<F> {
    fm.y.iter().map(|&l| F::from_f64(f64::from(l))).collect()
}

fn check_width<F: Scalar>(net: &FusedNet<F>, fm: &FeatureMatrix, role: &str) -> Result<()> {
    if fm.n_features() != net.arch().input_dim {
        return Err(ModelError::Config(format!(
            "{role} partition has {} features but the model expects {}",
            fm.n_features(),
            net.arch().input_dim
        )));
    }
    if fm.n_rows() == 0 {
        return Err(ModelError::Config(format!("{role} partition is empty")));
    }
    Ok(())
}

/// Composite loss and confusion counts over a labeled matrix, dropout
/// disabled. Requires the decoder (the reconstruction term is part of the
/// loss). Evaluated in batches so activation caches never cover the whole
/// set.
pub fn evaluate_model<F: Scalar>(
    net: &FusedNet<F>,
    fm: &FeatureMatrix,
    batch_size: usize,
    threshold: f64,
) -> Result<(f64, BinaryCounts)> {
    if batch_size == 0 {
        return Err(ModelError::Config("batch_size must be at least 1".into()));
    }
    check_width(net, fm, "evaluation")?;
    let x = matrix_tensor::<F>(fm)?;
    let targets = label_targets::<F>(fm);
    evaluate_partition(net, &x, &targets, batch_size, threshold)
}

fn evaluate_partition<F: Scalar>(
    net: &FusedNet<F>,
    x: &Tensor2<F>,
    targets: &[F],
    batch_size: usize,
    threshold: f64,
) -> Result<(f64, BinaryCounts)> {
    let n = x.rows();
    let mut bce_sum = 0.0;
    let mut recon_sum = 0.0;
    let mut l2_term = 0.0;
    let mut counts = BinaryCounts::default();
    let mut start = 0;
    while start < n {
        let end = (start + batch_size).min(n);
        let rows = end - start;
        let bx = slice_rows(x, start, end);
        let bt = &targets[start..end];
        let (probs, recon, _) = net.forward_train(&bx, None)?;
        let terms = composite_loss(
            &probs,
            bt,
            &recon,
            &bx,
            net.arch().lambda_recon,
            net.arch().lambda_l2,
            &net.fuse1.w,
        )?;
        bce_sum += terms.bce.as_f64() * rows as f64;
        recon_sum += terms.recon_mse.as_f64() * rows as f64;
        l2_term = terms.l2.as_f64();
        counts.add(&probs, bt, threshold);
        start = end;
    }
    let loss = bce_sum / n as f64
        + net.arch().lambda_recon * (recon_sum / n as f64)
        + net.arch().lambda_l2 * l2_term;
    Ok((loss, counts))
}

fn slice_rows<F: Scalar>(x: &Tensor2<F>, start: usize, end: usize) -> Tensor2<F> {
    let cols = x.cols();
    let mut out = Tensor2::zeros(end - start, cols);
    for (dst, src) in (start..end).enumerate() {
        out.row_mut(dst).copy_from_slice(x.row(src));
    }
    out
}

fn gather_rows<F: Scalar>(x: &Tensor2<F>, idx: &[usize]) -> Tensor2<F> {
    let mut out = Tensor2::zeros(idx.len(), x.cols());
    for (dst, &src) in idx.iter().enumerate() {
        out.row_mut(dst).copy_from_slice(x.row(src));
    }
    out
}

fn diverged<F: Scalar>(
    epoch_completed: usize,
    message: String,
    last_good: &FusedNet<F>,
) -> ModelError {
    ModelError::Diverged {
        epoch: epoch_completed,
        message,
        last_good: Box::new(last_good.to_f64()),
    }
}

/// Mini-batch training with epoch-seeded shuffling, optional dropout,
/// per-epoch metrics, and early stopping on validation loss.
///
/// The final model is the best-validation-loss snapshot when early stopping
/// is active, otherwise the last state. On numerical divergence the error
/// carries the state after the last completed epoch.
pub fn train<F: Scalar>(
    mut net: FusedNet<F>,
    train_fm: &FeatureMatrix,
    val_fm: Option<&FeatureMatrix>,
    cfg: &TrainConfig,
) -> Result<(FusedNet<F>, Vec<EpochRecord>)> {
    cfg.validate()?;
    check_width(&net, train_fm, "train")?;
    if let Some(v) = val_fm {
        check_width(&net, v, "validation")?;
    }
    if !net.has_decoder() {
        return Err(ModelError::Arch(
            "training requires the reconstruction decoder; this model was stripped".into(),
        ));
    }

    let x = matrix_tensor::<F>(train_fm)?;
    let targets = label_targets::<F>(train_fm);
    let val = match val_fm {
        Some(v) => Some((matrix_tensor::<F>(v)?, label_targets::<F>(v))),
        None => None,
    };

    let n = x.rows();
    let mut adam: Adam<F> = Adam::new(cfg.adam())?;
    let mut grads = FusedGrads::zeros(net.arch());
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, FusedNet<F>)> = None;
    let mut epochs_without_improvement = 0usize;
    let mut global_step = 0u64;

    for epoch in 0..cfg.epochs {
        // State after the last fully completed epoch, for divergence reports.
        let last_good = net.clone();

        let mut order: Vec<usize> = (0..n).collect();
        {
            use rand::seq::SliceRandom;
            let mut rng = seeded_rng(derive_seed(cfg.seed, "shuffle", epoch as u64));
            order.shuffle(&mut rng);
        }

        let mut loss_sum = 0.0;
        let mut train_counts = BinaryCounts::default();
        for chunk in order.chunks(cfg.batch_size) {
            let bx = gather_rows(&x, chunk);
            let bt: Vec<F> = chunk.iter().map(|&i| targets[i]).collect();
            grads.zero();
            let mut dropout_rng = seeded_rng(derive_seed(cfg.seed, "dropout", global_step));
            let (terms, probs) =
                net.loss_and_grads(&bx, &bt, Some(&mut dropout_rng), &mut grads)?;
            if !terms.total.as_f64().is_finite() {
                return Err(diverged(
                    epoch,
                    format!("non-finite training loss in epoch {}", epoch + 1),
                    &last_good,
                ));
            }
            loss_sum += terms.total.as_f64() * chunk.len() as f64;
            train_counts.add(&probs, &bt, cfg.threshold);

            let views = grads.views();
            let mut bufs = net.named_buffers_mut();
            let mut pairs: Vec<(&mut [F], &[F])> =
                bufs.iter_mut().map(|(_, b)| &mut **b).zip(views).collect();
            match adam.step(&mut pairs) {
                Ok(()) => {}
                Err(NnError::NonFinite(what)) => {
                    return Err(diverged(
                        epoch,
                        format!("non-finite gradient ({what}) in epoch {}", epoch + 1),
                        &last_good,
                    ));
                }
                Err(e) => return Err(e.into()),
            }
            global_step += 1;
        }

        let mut record = EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / n as f64,
            train_accuracy: train_counts.accuracy(),
            train_precision: train_counts.precision(),
            train_recall: train_counts.recall(),
            val_loss: None,
            val_accuracy: None,
            val_precision: None,
            val_recall: None,
        };

        let mut stop = false;
        if let Some((vx, vt)) = &val {
            let (vloss, vcounts) = evaluate_partition(&net, vx, vt, cfg.batch_size, cfg.threshold)?;
            if !vloss.is_finite() {
                return Err(diverged(
                    epoch,
                    format!("non-finite validation loss after epoch {}", epoch + 1),
                    &last_good,
                ));
            }
            record.val_loss = Some(vloss);
            record.val_accuracy = Some(vcounts.accuracy());
            record.val_precision = Some(vcounts.precision());
            record.val_recall = Some(vcounts.recall());

            if cfg.patience.is_some() {
                let improved = best.as_ref().is_none_or(|(b, _)| vloss < *b);
                if improved {
                    best = Some((vloss, net.clone()));
                    epochs_without_improvement = 0;
                } else {
                    epochs_without_improvement += 1;
                    if epochs_without_improvement >= cfg.patience.unwrap_or(usize::MAX) {
                        stop = true;
                    }
                }
            }
        }
        history.push(record);
        if stop {
            break;
        }
    }

    // Keep the best-validation snapshot when early stopping tracked one.
    if let Some((_, snapshot)) = best {
        net = snapshot;
    }
    Ok((net, history))
}
