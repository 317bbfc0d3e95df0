use rand::Rng;

use crate::activation::Activation;
use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Fully connected layer: `y = act(x * w + b)`.
///
/// `w` is `[input_dim, output_dim]`, `b` has one entry per output unit.
#[derive(Clone, Debug)]
pub struct DenseParams<F> {
    pub w: Tensor2<F>,
    pub b: Vec<F>,
    pub act: Activation,
}

/// Gradient accumulator mirroring [`DenseParams`]. `backward` adds into it,
/// so one accumulator serves a whole mini-batch; call [`DenseGrads::zero`]
/// between batches.
#[derive(Clone, Debug)]
pub struct DenseGrads<F> {
    pub dw: Tensor2<F>,
    pub db: Vec<F>,
}

/// Values captured by `forward` that `backward` needs: the layer input and
/// the post-activation output (every supported activation's derivative is a
/// function of its output).
#[derive(Clone, Debug)]
pub struct DenseCache<F> {
    x: Tensor2<F>,
    y: Tensor2<F>,
}

/// Fan-in-scaled uniform init: `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
pub fn init_weight<F: Scalar, R: Rng>(
    rows: usize,
    cols: usize,
    fan_in: usize,
    rng: &mut R,
) -> Tensor2<F> {
    let limit = F::from_f64(1.0 / (fan_in as f64).sqrt());
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-limit..limit))
        .collect();
    Tensor2::from_vec(rows, cols, data).expect("length matches by construction")
}

impl<F: Scalar> DenseParams<F> {
    /// Fresh layer with fan-in-scaled uniform weights and zero biases.
    pub fn new<R: Rng>(input_dim: usize, output_dim: usize, act: Activation, rng: &mut R) -> Self {
        DenseParams {
            w: init_weight(input_dim, output_dim, input_dim, rng),
            b: vec![F::zero(); output_dim],
            act,
        }
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.w.rows()
    }

    #[inline]
    pub fn output_dim(&self) -> usize {
        self.w.cols()
    }

    /// Forward pass returning the output and the cache for `backward`.
    pub fn forward(&self, x: &Tensor2<F>) -> Result<(Tensor2<F>, DenseCache<F>)> {
        let y = self.forward_no_cache(x)?;
        Ok((y.clone(), DenseCache { x: x.clone(), y }))
    }

    /// Forward pass without caching, for inference.
    pub fn forward_no_cache(&self, x: &Tensor2<F>) -> Result<Tensor2<F>> {
        let mut y = x.matmul(&self.w)?;
        y.add_row_broadcast(&self.b)?;
        self.act.apply_in_place(&mut y);
        Ok(y)
    }

    /// Backward pass: accumulates `dw`/`db` into `grads` and returns the
    /// gradient with respect to the layer input.
    pub fn backward(
        &self,
        cache: &DenseCache<F>,
        dy: &Tensor2<F>,
        grads: &mut DenseGrads<F>,
    ) -> Result<Tensor2<F>> {
        if dy.shape() != cache.y.shape() {
            return Err(NnError::dim(
                "dense backward",
                format!("{}x{}", cache.y.rows(), cache.y.cols()),
                format!("{}x{}", dy.rows(), dy.cols()),
            ));
        }
        // dz = dy ⊙ act'(y)
        let mut dz = dy.clone();
        for (d, &y) in dz.data_mut().iter_mut().zip(cache.y.data()) {
            *d *= self.act.derivative_from_output(y);
        }
        grads.dw.add_scaled(&cache.x.matmul_tn(&dz)?, F::one())?;
        for (g, s) in grads.db.iter_mut().zip(dz.col_sums()) {
            *g += s;
        }
        dz.matmul_nt(&self.w)
    }
}

impl<F: Scalar> DenseGrads<F> {
    pub fn zeros_like(p: &DenseParams<F>) -> Self {
        DenseGrads {
            dw: Tensor2::zeros(p.w.rows(), p.w.cols()),
            db: vec![F::zero(); p.b.len()],
        }
    }

    pub fn zero(&mut self) {
        self.dw.data_mut().fill(F::zero());
        self.db.fill(F::zero());
    }
}
