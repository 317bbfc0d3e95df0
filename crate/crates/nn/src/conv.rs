use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::dense::init_weight;
use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Padding policy for 1-D convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// Zero-pad so `output_len == ceil(input_len / stride)`; when total
    /// padding is odd the extra zero goes on the right.
    Same,
    /// No padding; requires `input_len >= kernel`.
    Valid,
}

/// 1-D convolution over a `[length, channels]` tensor.
///
/// Weights are stored patch-major as `[kernel * in_channels, out_channels]`,
/// so the forward pass is one im2col gather plus one matrix product.
#[derive(Clone, Debug)]
pub struct Conv1dParams<F> {
    pub w: Tensor2<F>,
    pub b: Vec<F>,
    pub kernel: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub stride: usize,
    pub padding: Padding,
    pub act: Activation,
}

#[derive(Clone, Debug)]
pub struct Conv1dGrads<F> {
    pub dw: Tensor2<F>,
    pub db: Vec<F>,
}

/// Forward-pass byproducts needed by `backward`.
#[derive(Clone, Debug)]
pub struct Conv1dCache<F> {
    patches: Tensor2<F>,
    y: Tensor2<F>,
    input_len: usize,
    pad_left: usize,
}

impl<F: Scalar> Conv1dParams<F> {
    pub fn new<R: Rng>(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
        act: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if kernel == 0 || stride == 0 || in_channels == 0 || out_channels == 0 {
            return Err(NnError::InvalidParameter(
                "conv1d: kernel, stride and channel counts must be positive".into(),
            ));
        }
        let fan_in = kernel * in_channels;
        Ok(Conv1dParams {
            w: init_weight(fan_in, out_channels, fan_in, rng),
            b: vec![F::zero(); out_channels],
            kernel,
            in_channels,
            out_channels,
            stride,
            padding,
            act,
        })
    }

    /// Output length for a given input length, or an error when the input is
    /// shorter than the kernel under `Valid` padding.
    pub fn output_len(&self, input_len: usize) -> Result<usize> {
        match self.padding {
            Padding::Same => Ok(input_len.div_ceil(self.stride)),
            Padding::Valid => {
                if input_len < self.kernel {
                    Err(NnError::dim(
                        "conv1d",
                        format!("input length >= kernel {}", self.kernel),
                        input_len.to_string(),
                    ))
                } else {
                    Ok((input_len - self.kernel) / self.stride + 1)
                }
            }
        }
    }

    fn pad_left(&self, input_len: usize, output_len: usize) -> usize {
        match self.padding {
            Padding::Valid => 0,
            Padding::Same => {
                let needed = (output_len - 1) * self.stride + self.kernel;
                needed.saturating_sub(input_len) / 2
            }
        }
    }

    fn gather_patches(&self, x: &Tensor2<F>, output_len: usize, pad_left: usize) -> Tensor2<F> {
        let (len, ch) = x.shape();
        let mut patches = Tensor2::zeros(output_len, self.kernel * ch);
        for t in 0..output_len {
            let row = patches.row_mut(t);
            for k in 0..self.kernel {
                let src = (t * self.stride + k) as isize - pad_left as isize;
                if src >= 0 && (src as usize) < len {
                    let src_row = x.row(src as usize);
                    row[k * ch..(k + 1) * ch].copy_from_slice(src_row);
                }
            }
        }
        patches
    }

    pub fn forward(&self, x: &Tensor2<F>) -> Result<(Tensor2<F>, Conv1dCache<F>)> {
        if x.cols() != self.in_channels {
            return Err(NnError::dim(
                "conv1d forward",
                format!("{} input channels", self.in_channels),
                x.cols().to_string(),
            ));
        }
        let out_len = self.output_len(x.rows())?;
        let pad_left = self.pad_left(x.rows(), out_len);
        let patches = self.gather_patches(x, out_len, pad_left);
        let mut y = patches.matmul(&self.w)?;
        y.add_row_broadcast(&self.b)?;
        self.act.apply_in_place(&mut y);
        Ok((
            y.clone(),
            Conv1dCache {
                patches,
                y,
                input_len: x.rows(),
                pad_left,
            },
        ))
    }

    pub fn forward_no_cache(&self, x: &Tensor2<F>) -> Result<Tensor2<F>> {
        if x.cols() != self.in_channels {
            return Err(NnError::dim(
                "conv1d forward",
                format!("{} input channels", self.in_channels),
                x.cols().to_string(),
            ));
        }
        let out_len = self.output_len(x.rows())?;
        let pad_left = self.pad_left(x.rows(), out_len);
        let patches = self.gather_patches(x, out_len, pad_left);
        let mut y = patches.matmul(&self.w)?;
        y.add_row_broadcast(&self.b)?;
        self.act.apply_in_place(&mut y);
        Ok(y)
    }

    /// Accumulates weight/bias gradients and returns the gradient with
    /// respect to the layer input (`[input_len, in_channels]`).
    pub fn backward(
        &self,
        cache: &Conv1dCache<F>,
        dy: &Tensor2<F>,
        grads: &mut Conv1dGrads<F>,
    ) -> Result<Tensor2<F>> {
        if dy.shape() != cache.y.shape() {
            return Err(NnError::dim(
                "conv1d backward",
                format!("{}x{}", cache.y.rows(), cache.y.cols()),
                format!("{}x{}", dy.rows(), dy.cols()),
            ));
        }
        let mut dz = dy.clone();
        for (d, &y) in dz.data_mut().iter_mut().zip(cache.y.data()) {
            *d *= self.act.derivative_from_output(y);
        }
        grads
            .dw
            .add_scaled(&cache.patches.matmul_tn(&dz)?, F::one())?;
        for (g, s) in grads.db.iter_mut().zip(dz.col_sums()) {
            *g += s;
        }
        // Scatter patch gradients back onto the input, reversing the gather.
        let dpatches = dz.matmul_nt(&self.w)?;
        let ch = self.in_channels;
        let mut dx = Tensor2::zeros(cache.input_len, ch);
        for t in 0..dpatches.rows() {
            let prow = dpatches.row(t);
            for k in 0..self.kernel {
                let src = (t * self.stride + k) as isize - cache.pad_left as isize;
                if src >= 0 && (src as usize) < cache.input_len {
                    let drow = dx.row_mut(src as usize);
                    for (d, &p) in drow.iter_mut().zip(&prow[k * ch..(k + 1) * ch]) {
                        *d += p;
                    }
                }
            }
        }
        Ok(dx)
    }
}

impl<F: Scalar> Conv1dGrads<F> {
    pub fn zeros_like(p: &Conv1dParams<F>) -> Self {
        Conv1dGrads {
            dw: Tensor2::zeros(p.w.rows(), p.w.cols()),
            db: vec![F::zero(); p.b.len()],
        }
    }

    pub fn zero(&mut self) {
        self.dw.data_mut().fill(F::zero());
        self.db.fill(F::zero());
    }
}

/// Argmax positions recorded by a pooling forward pass; `backward` routes
/// gradients only to the winning inputs.
#[derive(Clone, Debug)]
pub struct MaxPoolCache {
    argmax_rows: Vec<usize>,
    input_rows: usize,
}

/// Non-overlapping 1-D max pooling (window == stride). A shorter trailing
/// window is pooled as-is, so `output_len == ceil(input_len / window)`.
pub fn maxpool1d<F: Scalar>(x: &Tensor2<F>, window: usize) -> Result<(Tensor2<F>, MaxPoolCache)> {
    if window == 0 {
        return Err(NnError::InvalidParameter(
            "maxpool1d: window must be positive".into(),
        ));
    }
    if x.rows() == 0 {
        return Err(NnError::dim("maxpool1d", "at least one row", "0"));
    }
    let (len, ch) = x.shape();
    let out_len = len.div_ceil(window);
    let mut y = Tensor2::zeros(out_len, ch);
    let mut argmax_rows = vec![0usize; out_len * ch];
    for t in 0..out_len {
        let start = t * window;
        let end = (start + window).min(len);
        for c in 0..ch {
            let mut best = x.get(start, c);
            let mut best_row = start;
            for r in start + 1..end {
                let v = x.get(r, c);
                if v > best {
                    best = v;
                    best_row = r;
                }
            }
            y.set(t, c, best);
            argmax_rows[t * ch + c] = best_row;
        }
    }
    Ok((
        y,
        MaxPoolCache {
            argmax_rows,
            input_rows: len,
        },
    ))
}

pub fn maxpool1d_backward<F: Scalar>(dy: &Tensor2<F>, cache: &MaxPoolCache) -> Result<Tensor2<F>> {
    let ch = dy.cols();
    if dy.rows() * ch != cache.argmax_rows.len() {
        return Err(NnError::dim(
            "maxpool1d backward",
            format!("{} gradient entries", cache.argmax_rows.len()),
            (dy.rows() * ch).to_string(),
        ));
    }
    let mut dx = Tensor2::zeros(cache.input_rows, ch);
    for t in 0..dy.rows() {
        for c in 0..ch {
            let src = cache.argmax_rows[t * ch + c];
            let v = dx.get(src, c) + dy.get(t, c);
            dx.set(src, c, v);
        }
    }
    Ok(dx)
}

/// Per-channel argmax over all rows.
#[derive(Clone, Debug)]
pub struct GlobalMaxCache {
    argmax_rows: Vec<usize>,
    input_rows: usize,
}

/// Reduces `[length, channels]` to `[1, channels]` by taking each channel's
/// maximum over time. Errors on zero-length input.
pub fn global_maxpool<F: Scalar>(x: &Tensor2<F>) -> Result<(Tensor2<F>, GlobalMaxCache)> {
    if x.rows() == 0 {
        return Err(NnError::dim("global_maxpool", "at least one row", "0"));
    }
    let (len, ch) = x.shape();
    let mut y = Tensor2::zeros(1, ch);
    let mut argmax_rows = vec![0usize; ch];
    #[allow(clippy::needless_range_loop)] // c indexes y and argmax_rows in parallel
    for c in 0..ch {
        let mut best = x.get(0, c);
        let mut best_row = 0usize;
        for r in 1..len {
            let v = x.get(r, c);
            if v > best {
                best = v;
                best_row = r;
            }
        }
        y.set(0, c, best);
        argmax_rows[c] = best_row;
    }
    Ok((
        y,
        GlobalMaxCache {
            argmax_rows,
            input_rows: len,
        },
    ))
}

pub fn global_maxpool_backward<F: Scalar>(
    dy: &Tensor2<F>,
    cache: &GlobalMaxCache,
) -> Result<Tensor2<F>> {
    if dy.rows() != 1 || dy.cols() != cache.argmax_rows.len() {
        return Err(NnError::dim(
            "global_maxpool backward",
            format!("1x{}", cache.argmax_rows.len()),
            format!("{}x{}", dy.rows(), dy.cols()),
        ));
    }
    let mut dx = Tensor2::zeros(cache.input_rows, dy.cols());
    for (c, &src) in cache.argmax_rows.iter().enumerate() {
        dx.set(src, c, dy.get(0, c));
    }
    Ok(dx)
}
