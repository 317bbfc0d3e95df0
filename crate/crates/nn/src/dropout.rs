use rand::Rng;

use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Inverted dropout.
///
/// During training each element is zeroed with probability `rate` and
/// survivors are scaled by `1 / (1 - rate)`, so the expected activation is
/// unchanged and inference applies no compensation. Returns the output and,
/// when a mask was applied, the multiplier tensor (entries are `0` or the
/// survivor scale) for the backward pass.
pub fn dropout<F: Scalar, R: Rng>(
    x: &Tensor2<F>,
    rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<(Tensor2<F>, Option<Tensor2<F>>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NnError::InvalidParameter(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    if !training || rate == 0.0 {
        return Ok((x.clone(), None));
    }
    let scale = F::from_f64(1.0 / (1.0 - rate));
    let mut mask = Tensor2::zeros(x.rows(), x.cols());
    for m in mask.data_mut() {
        if rng.random::<f64>() >= rate {
            *m = scale;
        }
    }
    let y = x.hadamard(&mask)?;
    Ok((y, Some(mask)))
}

/// Backward pass: the mask is the local derivative.
pub fn dropout_backward<F: Scalar>(dy: &Tensor2<F>, mask: &Tensor2<F>) -> Result<Tensor2<F>> {
    dy.hadamard(mask)
}
