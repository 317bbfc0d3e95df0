use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Probabilities are clamped to `[EPSILON, 1 - EPSILON]` inside the
/// cross-entropy so saturated sigmoids cannot produce infinities.
pub const BCE_EPSILON: f64 = 1e-7;

#[inline]
pub fn clamp_prob<F: Scalar>(p: F) -> F {
    let lo = F::from_f64(BCE_EPSILON);
    let hi = F::one() - lo;
    p.max(lo).min(hi)
}

/// Mean binary cross-entropy over a batch of probabilities and 0/1 targets.
pub fn bce_mean<F: Scalar>(pred: &[F], target: &[F]) -> Result<F> {
    check_pair("bce", pred.len(), target.len())?;
    let n = F::from_f64(pred.len() as f64);
    let one = F::one();
    let mut acc = F::zero();
    for (&p, &t) in pred.iter().zip(target) {
        let p = clamp_prob(p);
        acc -= t * p.ln() + (one - t) * (one - p).ln();
    }
    Ok(acc / n)
}

/// Gradient of [`bce_mean`] with respect to each prediction.
///
/// Inside the clamp the derivative is `(p - t) / (p (1 - p) n)`; outside it
/// the clamp is flat, and the clamped value is used, matching the forward
/// computation exactly.
pub fn bce_grad<F: Scalar>(pred: &[F], target: &[F]) -> Result<Vec<F>> {
    check_pair("bce_grad", pred.len(), target.len())?;
    let n = F::from_f64(pred.len() as f64);
    let one = F::one();
    let lo = F::from_f64(BCE_EPSILON);
    let hi = one - lo;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            if p <= lo || p >= hi {
                F::zero()
            } else {
                (p - t) / (p * (one - p) * n)
            }
        })
        .collect())
}

/// Mean squared error over all elements of two same-shape tensors.
pub fn mse_mean<F: Scalar>(a: &Tensor2<F>, b: &Tensor2<F>) -> Result<F> {
    if a.shape() != b.shape() {
        return Err(NnError::dim(
            "mse",
            format!("{}x{}", a.rows(), a.cols()),
            format!("{}x{}", b.rows(), b.cols()),
        ));
    }
    if a.is_empty() {
        return Err(NnError::InvalidParameter("mse: empty tensors".into()));
    }
    let n = F::from_f64(a.len() as f64);
    let mut acc = F::zero();
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let d = x - y;
        acc += d * d;
    }
    Ok(acc / n)
}

/// Gradient of [`mse_mean`] with respect to `a`: `2 (a - b) / len`.
pub fn mse_grad<F: Scalar>(a: &Tensor2<F>, b: &Tensor2<F>) -> Result<Tensor2<F>> {
    if a.shape() != b.shape() {
        return Err(NnError::dim(
            "mse_grad",
            format!("{}x{}", a.rows(), a.cols()),
            format!("{}x{}", b.rows(), b.cols()),
        ));
    }
    let scale = F::from_f64(2.0 / a.len() as f64);
    let mut out = a.clone();
    for (o, &y) in out.data_mut().iter_mut().zip(b.data()) {
        *o = (*o - y) * scale;
    }
    Ok(out)
}

/// Loss decomposition: classification term, reconstruction term, weight
/// penalty, and their weighted total.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossTerms<F> {
    pub bce: F,
    pub recon_mse: F,
    pub l2: F,
    pub total: F,
}

/// Composite objective: `bce + lambda_recon * mse + lambda_l2 * sum(w^2)`
/// where `w` ranges over `penalized_weights`.
pub fn composite_loss<F: Scalar>(
    pred: &[F],
    target: &[F],
    recon: &Tensor2<F>,
    original: &Tensor2<F>,
    lambda_recon: f64,
    lambda_l2: f64,
    penalized_weights: &Tensor2<F>,
) -> Result<LossTerms<F>> {
    let bce = bce_mean(pred, target)?;
    let recon_mse = mse_mean(recon, original)?;
    let l2 = penalized_weights.sum_squares();
    let total = bce + F::from_f64(lambda_recon) * recon_mse + F::from_f64(lambda_l2) * l2;
    Ok(LossTerms {
        bce,
        recon_mse,
        l2,
        total,
    })
}

fn check_pair(op: &'static str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(NnError::dim(op, format!("{a} targets"), b.to_string()));
    }
    if a == 0 {
        return Err(NnError::InvalidParameter(format!("{op}: empty batch")));
    }
    Ok(())
}
