use rand::Rng;

use crate::dense::init_weight;
use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Gate order used throughout: input, forget, output, candidate.
pub const GATE_COUNT: usize = 4;
pub const GATE_INPUT: usize = 0;
pub const GATE_FORGET: usize = 1;
pub const GATE_OUTPUT: usize = 2;
pub const GATE_CANDIDATE: usize = 3;

/// One direction of an LSTM layer.
///
/// Per gate `g`: `z_g = x * wx[g] + h_prev * wh[g] + b[g]`, with sigmoid on
/// the input/forget/output gates and tanh on the candidate. State update:
/// `c' = f ⊙ c + i ⊙ cand`, `h' = o ⊙ tanh(c')`.
#[derive(Clone, Debug)]
pub struct LstmParams<F> {
    /// Input projections, each `[input_dim, hidden]`.
    pub wx: [Tensor2<F>; GATE_COUNT],
    /// Recurrent projections, each `[hidden, hidden]`.
    pub wh: [Tensor2<F>; GATE_COUNT],
    /// Biases, each of length `hidden`.
    pub b: [Vec<F>; GATE_COUNT],
}

/// Gradient accumulator mirroring [`LstmParams`].
#[derive(Clone, Debug)]
pub struct LstmGrads<F> {
    pub dwx: [Tensor2<F>; GATE_COUNT],
    pub dwh: [Tensor2<F>; GATE_COUNT],
    pub db: [Vec<F>; GATE_COUNT],
}

/// Everything one cell step must remember for backpropagation through time.
#[derive(Clone, Debug)]
struct StepCache<F> {
    x: Vec<F>,
    h_prev: Vec<F>,
    c_prev: Vec<F>,
    /// Post-nonlinearity gate activations in canonical order.
    gates: [Vec<F>; GATE_COUNT],
    tanh_c: Vec<F>,
    /// True when `h_prev`/`c_prev` are the zero initial state, in which case
    /// the recurrent product was skipped and contributes no gradient.
    initial: bool,
}

impl<F: Scalar> LstmParams<F> {
    /// Fresh parameters: fan-in-scaled uniform weights, zero biases except
    /// the forget gate, which starts at `forget_bias` (conventionally 1.0 so
    /// early training does not erase cell state).
    pub fn new<R: Rng>(
        input_dim: usize,
        hidden: usize,
        forget_bias: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(NnError::InvalidParameter(
                "lstm: input_dim and hidden must be positive".into(),
            ));
        }
        let wx = std::array::from_fn(|_| init_weight(input_dim, hidden, input_dim, rng));
        let wh = std::array::from_fn(|_| init_weight(hidden, hidden, hidden, rng));
        let mut b: [Vec<F>; GATE_COUNT] = std::array::from_fn(|_| vec![F::zero(); hidden]);
        b[GATE_FORGET] = vec![F::from_f64(forget_bias); hidden];
        Ok(LstmParams { wx, wh, b })
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.wx[0].rows()
    }

    #[inline]
    pub fn hidden(&self) -> usize {
        self.wx[0].cols()
    }

    /// Single cell step on plain vectors; returns `(h_next, c_next)`.
    pub fn cell_step(&self, x: &[F], h: &[F], c: &[F]) -> Result<(Vec<F>, Vec<F>)> {
        let cache = self.step_cached(x, h, c, false)?;
        let h_next = hadamard_vec(&cache.gates[GATE_OUTPUT], &cache.tanh_c);
        let c_next = cell_state(&cache);
        Ok((h_next, c_next))
    }

    fn check_step_dims(&self, x: &[F], h: &[F], c: &[F]) -> Result<()> {
        if x.len() != self.input_dim() || h.len() != self.hidden() || c.len() != self.hidden() {
            return Err(NnError::dim(
                "lstm step",
                format!(
                    "x[{}], h[{}], c[{}]",
                    self.input_dim(),
                    self.hidden(),
                    self.hidden()
                ),
                format!("x[{}], h[{}], c[{}]", x.len(), h.len(), c.len()),
            ));
        }
        Ok(())
    }

    /// Cell step that records a cache. `initial` marks the zero start state,
    /// for which the recurrent matmul is skipped (it contributes nothing).
    fn step_cached(&self, x: &[F], h: &[F], c: &[F], initial: bool) -> Result<StepCache<F>> {
        self.check_step_dims(x, h, c)?;
        let hidden = self.hidden();
        let mut gates: [Vec<F>; GATE_COUNT] = std::array::from_fn(|g| self.b[g].clone());
        #[allow(clippy::needless_range_loop)] // g indexes gates, wx, and wh in parallel
        for g in 0..GATE_COUNT {
            let z = &mut gates[g];
            let wx = &self.wx[g];
            for (d, &xv) in x.iter().enumerate() {
                let w_row = wx.row(d);
                for (zj, &w) in z.iter_mut().zip(w_row) {
                    *zj += xv * w;
                }
            }
            if !initial {
                let wh = &self.wh[g];
                for (k, &hv) in h.iter().enumerate() {
                    let w_row = wh.row(k);
                    for (zj, &w) in z.iter_mut().zip(w_row) {
                        *zj += hv * w;
                    }
                }
            }
        }
        for g in [GATE_INPUT, GATE_FORGET, GATE_OUTPUT] {
            for z in &mut gates[g] {
                *z = F::one() / (F::one() + (-*z).exp());
            }
        }
        for z in &mut gates[GATE_CANDIDATE] {
            *z = z.tanh();
        }
        let mut tanh_c = vec![F::zero(); hidden];
        for j in 0..hidden {
            let c_new =
                gates[GATE_FORGET][j] * c[j] + gates[GATE_INPUT][j] * gates[GATE_CANDIDATE][j];
            tanh_c[j] = c_new.tanh();
        }
        Ok(StepCache {
            x: x.to_vec(),
            h_prev: h.to_vec(),
            c_prev: c.to_vec(),
            gates,
            tanh_c,
            initial,
        })
    }

    /// Backward through one cached step.
    ///
    /// `dh` is the full gradient on `h_next` (output slice plus carry from
    /// the later step); `dc` is the carry on `c_next`. Returns
    /// `(dx, dh_prev, dc_prev)` and accumulates parameter gradients.
    fn step_backward(
        &self,
        cache: &StepCache<F>,
        dh: &[F],
        dc: &[F],
        grads: &mut LstmGrads<F>,
    ) -> (Vec<F>, Vec<F>, Vec<F>) {
        let hidden = self.hidden();
        let one = F::one();
        let i = &cache.gates[GATE_INPUT];
        let f = &cache.gates[GATE_FORGET];
        let o = &cache.gates[GATE_OUTPUT];
        let cand = &cache.gates[GATE_CANDIDATE];

        let mut dz: [Vec<F>; GATE_COUNT] = std::array::from_fn(|_| vec![F::zero(); hidden]);
        let mut dc_prev = vec![F::zero(); hidden];
        for j in 0..hidden {
            let tc = cache.tanh_c[j];
            // Total gradient on c_next: the carry plus the path through
            // h_next = o ⊙ tanh(c_next).
            let dct = dc[j] + dh[j] * o[j] * (one - tc * tc);
            let d_o = dh[j] * tc;
            let d_i = dct * cand[j];
            let d_f = dct * cache.c_prev[j];
            let d_cand = dct * i[j];
            dc_prev[j] = dct * f[j];
            dz[GATE_INPUT][j] = d_i * i[j] * (one - i[j]);
            dz[GATE_FORGET][j] = d_f * f[j] * (one - f[j]);
            dz[GATE_OUTPUT][j] = d_o * o[j] * (one - o[j]);
            dz[GATE_CANDIDATE][j] = d_cand * (one - cand[j] * cand[j]);
        }

        let mut dx = vec![F::zero(); self.input_dim()];
        let mut dh_prev = vec![F::zero(); hidden];
        #[allow(clippy::needless_range_loop)] // g indexes dz, wx, wh, and grads in parallel
        for g in 0..GATE_COUNT {
            let dzg = &dz[g];
            // dwx[g] += x ⊗ dz[g]; dx += wx[g] · dz[g]
            let wx = &self.wx[g];
            let dwx = &mut grads.dwx[g];
            for (d, &xv) in cache.x.iter().enumerate() {
                let w_row = wx.row(d);
                let g_row = dwx.row_mut(d);
                let mut acc = F::zero();
                for j in 0..hidden {
                    g_row[j] += xv * dzg[j];
                    acc += w_row[j] * dzg[j];
                }
                dx[d] += acc;
            }
            if !cache.initial {
                let wh = &self.wh[g];
                let dwh = &mut grads.dwh[g];
                for (k, &hv) in cache.h_prev.iter().enumerate() {
                    let w_row = wh.row(k);
                    let g_row = dwh.row_mut(k);
                    let mut acc = F::zero();
                    for j in 0..hidden {
                        g_row[j] += hv * dzg[j];
                        acc += w_row[j] * dzg[j];
                    }
                    dh_prev[k] += acc;
                }
            }
            for (db, &d) in grads.db[g].iter_mut().zip(dzg) {
                *db += d;
            }
        }
        (dx, dh_prev, dc_prev)
    }
}

fn hadamard_vec<F: Scalar>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x * y).collect()
}

fn cell_state<F: Scalar>(cache: &StepCache<F>) -> Vec<F> {
    (0..cache.tanh_c.len())
        .map(|j| {
            cache.gates[GATE_FORGET][j] * cache.c_prev[j]
                + cache.gates[GATE_INPUT][j] * cache.gates[GATE_CANDIDATE][j]
        })
        .collect()
}

impl<F: Scalar> LstmGrads<F> {
    pub fn zeros_like(p: &LstmParams<F>) -> Self {
        LstmGrads {
            dwx: std::array::from_fn(|g| Tensor2::zeros(p.wx[g].rows(), p.wx[g].cols())),
            dwh: std::array::from_fn(|g| Tensor2::zeros(p.wh[g].rows(), p.wh[g].cols())),
            db: std::array::from_fn(|g| vec![F::zero(); p.b[g].len()]),
        }
    }

    pub fn zero(&mut self) {
        for g in 0..GATE_COUNT {
            self.dwx[g].data_mut().fill(F::zero());
            self.dwh[g].data_mut().fill(F::zero());
            self.db[g].fill(F::zero());
        }
    }
}

/// Caches for a bidirectional pass over one sequence.
#[derive(Clone, Debug)]
pub struct BiLstmCache<F> {
    fwd_steps: Vec<StepCache<F>>,
    bwd_steps: Vec<StepCache<F>>,
    return_sequences: bool,
}

/// Runs the forward and backward directions over `seq` (`[steps, features]`)
/// from zero initial state and concatenates per-step hidden states.
///
/// With `return_sequences` the output is `[steps, fwd_hidden + bwd_hidden]`
/// where row `t` holds the forward state after step `t` followed by the
/// backward state after consuming the suffix starting at `t`. Without it the
/// output is one row: the forward state after the last step concatenated
/// with the backward state after the first (i.e. each direction's final
/// state).
pub fn bilstm_forward<F: Scalar>(
    seq: &Tensor2<F>,
    fwd: &LstmParams<F>,
    bwd: &LstmParams<F>,
    return_sequences: bool,
) -> Result<(Tensor2<F>, BiLstmCache<F>)> {
    let steps = seq.rows();
    if steps == 0 {
        return Err(NnError::dim("bilstm", "at least one step", "0"));
    }
    if seq.cols() != fwd.input_dim() || seq.cols() != bwd.input_dim() {
        return Err(NnError::dim(
            "bilstm",
            format!("{} features", fwd.input_dim()),
            seq.cols().to_string(),
        ));
    }

    // (step caches, hidden state per step) for one direction
    type DirectionRun<F> = (Vec<StepCache<F>>, Vec<Vec<F>>);
    let run = |params: &LstmParams<F>, reverse: bool| -> Result<DirectionRun<F>> {
        let hidden = params.hidden();
        let mut h = vec![F::zero(); hidden];
        let mut c = vec![F::zero(); hidden];
        let mut caches = Vec::with_capacity(steps);
        let mut states = Vec::with_capacity(steps);
        for s in 0..steps {
            let row = if reverse { steps - 1 - s } else { s };
            let cache = params.step_cached(seq.row(row), &h, &c, s == 0)?;
            c = cell_state(&cache);
            h = cache.gates[GATE_OUTPUT]
                .iter()
                .zip(&cache.tanh_c)
                .map(|(&o, &t)| o * t)
                .collect();
            caches.push(cache);
            states.push(h.clone());
        }
        Ok((caches, states))
    };

    let (fwd_steps, fwd_states) = run(fwd, false)?;
    let (bwd_steps, bwd_states) = run(bwd, true)?;
    let (fh, bh) = (fwd.hidden(), bwd.hidden());

    let out = if return_sequences {
        let mut out = Tensor2::zeros(steps, fh + bh);
        for t in 0..steps {
            let row = out.row_mut(t);
            row[..fh].copy_from_slice(&fwd_states[t]);
            // Backward step index s consumed seq row steps-1-s, so seq row t
            // corresponds to backward state steps-1-t.
            row[fh..].copy_from_slice(&bwd_states[steps - 1 - t]);
        }
        out
    } else {
        let mut out = Tensor2::zeros(1, fh + bh);
        let row = out.row_mut(0);
        row[..fh].copy_from_slice(&fwd_states[steps - 1]);
        row[fh..].copy_from_slice(&bwd_states[steps - 1]);
        out
    };

    Ok((
        out,
        BiLstmCache {
            fwd_steps,
            bwd_steps,
            return_sequences,
        },
    ))
}

/// Backpropagation through time for [`bilstm_forward`]; accumulates into the
/// two gradient sets and returns the gradient with respect to `seq`.
pub fn bilstm_backward<F: Scalar>(
    dy: &Tensor2<F>,
    fwd: &LstmParams<F>,
    bwd: &LstmParams<F>,
    cache: &BiLstmCache<F>,
    fwd_grads: &mut LstmGrads<F>,
    bwd_grads: &mut LstmGrads<F>,
) -> Result<Tensor2<F>> {
    let steps = cache.fwd_steps.len();
    let (fh, bh) = (fwd.hidden(), bwd.hidden());
    let expected_rows = if cache.return_sequences { steps } else { 1 };
    if dy.shape() != (expected_rows, fh + bh) {
        return Err(NnError::dim(
            "bilstm backward",
            format!("{expected_rows}x{}", fh + bh),
            format!("{}x{}", dy.rows(), dy.cols()),
        ));
    }

    let mut dseq = Tensor2::zeros(steps, fwd.input_dim());

    // Forward direction: step s maps to seq row s and, when returning
    // sequences, receives output gradient dy[s][..fh].
    {
        let mut dh_carry = vec![F::zero(); fh];
        let mut dc_carry = vec![F::zero(); fh];
        for s in (0..steps).rev() {
            let mut dh = dh_carry.clone();
            if cache.return_sequences {
                for (d, &g) in dh.iter_mut().zip(&dy.row(s)[..fh]) {
                    *d += g;
                }
            } else if s == steps - 1 {
                for (d, &g) in dh.iter_mut().zip(&dy.row(0)[..fh]) {
                    *d += g;
                }
            }
            let (dx, dh_prev, dc_prev) =
                fwd.step_backward(&cache.fwd_steps[s], &dh, &dc_carry, fwd_grads);
            for (d, &g) in dseq.row_mut(s).iter_mut().zip(&dx) {
                *d += g;
            }
            dh_carry = dh_prev;
            dc_carry = dc_prev;
        }
    }

    // Backward direction: step s consumed seq row steps-1-s; its state shows
    // up in output row steps-1-s (sequences) or in the single output row.
    {
        let mut dh_carry = vec![F::zero(); bh];
        let mut dc_carry = vec![F::zero(); bh];
        for s in (0..steps).rev() {
            let seq_row = steps - 1 - s;
            let mut dh = dh_carry.clone();
            if cache.return_sequences {
                for (d, &g) in dh.iter_mut().zip(&dy.row(seq_row)[fh..]) {
                    *d += g;
                }
            } else if s == steps - 1 {
                for (d, &g) in dh.iter_mut().zip(&dy.row(0)[fh..]) {
                    *d += g;
                }
            }
            let (dx, dh_prev, dc_prev) =
                bwd.step_backward(&cache.bwd_steps[s], &dh, &dc_carry, bwd_grads);
            for (d, &g) in dseq.row_mut(seq_row).iter_mut().zip(&dx) {
                *d += g;
            }
            dh_carry = dh_prev;
            dc_carry = dc_prev;
        }
    }

    Ok(dseq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    /// All-zero weights and biases isolate the state-update algebra.
    fn zero_params(input_dim: usize, hidden: usize) -> LstmParams<f64> {
        let mut p = LstmParams::<f64>::new(input_dim, hidden, 0.0, &mut seeded_rng(0)).unwrap();
        for g in 0..GATE_COUNT {
            p.wx[g].data_mut().fill(0.0);
            p.wh[g].data_mut().fill(0.0);
            p.b[g].fill(0.0);
        }
        p
    }

    #[test]
    fn zero_weight_cell_halves_state() {
        // With all-zero weights every sigmoid gate is 0.5 and the candidate
        // is tanh(0) = 0, so c' = 0.5*c and h' = 0.5*tanh(0.5*c).
        let p = zero_params(1, 1);
        let (h, c) = p.cell_step(&[1.0], &[0.0], &[1.0]).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-15);
        let expected_h = 0.5 * (0.5f64).tanh();
        assert!((h[0] - expected_h).abs() < 1e-15);
        assert!((h[0] - 0.231_058_578_63).abs() < 1e-9);
    }

    #[test]
    fn forget_bias_default_initialization() {
        let p = LstmParams::<f64>::new(3, 4, 1.0, &mut seeded_rng(1)).unwrap();
        assert!(p.b[GATE_FORGET].iter().all(|&b| b == 1.0));
        assert!(p.b[GATE_INPUT].iter().all(|&b| b == 0.0));
        assert!(p.b[GATE_OUTPUT].iter().all(|&b| b == 0.0));
        assert!(p.b[GATE_CANDIDATE].iter().all(|&b| b == 0.0));
    }

    #[test]
    fn bilstm_output_shapes() {
        let mut rng = seeded_rng(2);
        let fwd = LstmParams::<f64>::new(5, 3, 1.0, &mut rng).unwrap();
        let bwd = LstmParams::<f64>::new(5, 3, 1.0, &mut rng).unwrap();
        let seq = Tensor2::from_vec(4, 5, (0..20).map(|i| i as f64 * 0.1).collect()).unwrap();
        let (seq_out, _) = bilstm_forward(&seq, &fwd, &bwd, true).unwrap();
        assert_eq!(seq_out.shape(), (4, 6));
        let (final_out, _) = bilstm_forward(&seq, &fwd, &bwd, false).unwrap();
        assert_eq!(final_out.shape(), (1, 6));
        // Final state equals the last row's forward half and the first row's
        // backward half of the sequence output.
        let last = seq_out.row(3);
        let first = seq_out.row(0);
        for j in 0..3 {
            assert!((final_out.get(0, j) - last[j]).abs() < 1e-15);
            assert!((final_out.get(0, 3 + j) - first[3 + j]).abs() < 1e-15);
        }
    }

    #[test]
    fn single_step_directions_agree() {
        // With one step both directions see the same input from zero state,
        // so equal parameters give equal halves.
        let mut rng = seeded_rng(3);
        let fwd = LstmParams::<f64>::new(4, 2, 1.0, &mut rng).unwrap();
        let bwd = fwd.clone();
        let seq = Tensor2::from_vec(1, 4, vec![0.3, -0.2, 0.8, 0.1]).unwrap();
        let (out, _) = bilstm_forward(&seq, &fwd, &bwd, false).unwrap();
        for j in 0..2 {
            assert!((out.get(0, j) - out.get(0, 2 + j)).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_sequence_errors() {
        let mut rng = seeded_rng(4);
        let fwd = LstmParams::<f64>::new(4, 2, 1.0, &mut rng).unwrap();
        let bwd = LstmParams::<f64>::new(4, 2, 1.0, &mut rng).unwrap();
        let seq = Tensor2::<f64>::zeros(0, 4);
        assert!(bilstm_forward(&seq, &fwd, &bwd, true).is_err());
    }

    #[test]
    fn dimension_mismatch_errors() {
        let mut rng = seeded_rng(5);
        let p = LstmParams::<f64>::new(3, 2, 1.0, &mut rng).unwrap();
        assert!(p.cell_step(&[1.0], &[0.0, 0.0], &[0.0, 0.0]).is_err());
        assert!(p.cell_step(&[1.0, 2.0, 3.0], &[0.0], &[0.0, 0.0]).is_err());
    }
}
