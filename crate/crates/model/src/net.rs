use edgeguard_nn::conv::{
    global_maxpool, global_maxpool_backward, maxpool1d, maxpool1d_backward, Conv1dCache,
    Conv1dGrads, Conv1dParams, GlobalMaxCache, MaxPoolCache, Padding,
};
use edgeguard_nn::dense::{DenseCache, DenseGrads, DenseParams};
use edgeguard_nn::dropout::{dropout, dropout_backward};
use edgeguard_nn::loss::{bce_grad, composite_loss, mse_grad, LossTerms};
use edgeguard_nn::lstm::{bilstm_backward, bilstm_forward, BiLstmCache, LstmGrads, LstmParams};
use edgeguard_nn::rng::seeded_rng;
use edgeguard_nn::{Activation, NnError, Scalar, Tensor2};
use rand_chacha::ChaCha8Rng;

use crate::arch::ArchDescriptor;
use crate::error::{ModelError, Result};

/// Bias offset on the forget gate at initialization; keeps early cell state
/// flowing so the recurrent layers train.
const FORGET_BIAS: f64 = 1.0;

#[derive(Clone, Debug)]
pub(crate) struct Decoder<F> {
    pub(crate) d1: DenseParams<F>,
    pub(crate) d2: DenseParams<F>,
}

/// The three-branch detector.
///
/// Branch one compresses the input through a dense encoder to a bottleneck
/// embedding (a decoder reconstructs the input for the auxiliary loss and is
/// dropped at deployment). Branch two treats the feature vector as a
/// length-D one-channel signal through two convolutions with pooling. Branch
/// three treats it as a one-step sequence through two stacked bidirectional
/// recurrent layers. The three fixed-width embeddings are concatenated, in
/// that order, into a dense head that emits one probability per row.
#[derive(Clone, Debug)]
pub struct FusedNet<F> {
    arch: ArchDescriptor,
    enc1: DenseParams<F>,
    enc2: DenseParams<F>,
    decoder: Option<Decoder<F>>,
    conv1: Conv1dParams<F>,
    conv2: Conv1dParams<F>,
    cnn_proj: DenseParams<F>,
    l1f: LstmParams<F>,
    l1b: LstmParams<F>,
    l2f: LstmParams<F>,
    l2b: LstmParams<F>,
    lstm_proj: DenseParams<F>,
    pub(crate) fuse1: DenseParams<F>,
    fuse2: DenseParams<F>,
}

/// Per-batch byproducts of [`FusedNet::forward_train`] consumed by
/// [`FusedNet::backward`].
pub struct BatchCache<F> {
    rows: usize,
    enc1: DenseCache<F>,
    enc1_mask: Option<Tensor2<F>>,
    enc2: DenseCache<F>,
    dec1: DenseCache<F>,
    dec2: DenseCache<F>,
    conv1: Vec<Conv1dCache<F>>,
    pool1: Vec<MaxPoolCache>,
    conv2: Vec<Conv1dCache<F>>,
    gpool: Vec<GlobalMaxCache>,
    cnn_proj: DenseCache<F>,
    l1: Vec<BiLstmCache<F>>,
    l2: Vec<BiLstmCache<F>>,
    lstm_proj: DenseCache<F>,
    fuse1: DenseCache<F>,
    fuse_mask: Option<Tensor2<F>>,
    fuse2: DenseCache<F>,
}

/// Gradient accumulators for every parameter buffer, decoder included.
#[derive(Clone, Debug)]
pub struct FusedGrads<F> {
    enc1: DenseGrads<F>,
    enc2: DenseGrads<F>,
    dec1: DenseGrads<F>,
    dec2: DenseGrads<F>,
    conv1: Conv1dGrads<F>,
    conv2: Conv1dGrads<F>,
    cnn_proj: DenseGrads<F>,
    l1f: LstmGrads<F>,
    l1b: LstmGrads<F>,
    l2f: LstmGrads<F>,
    l2b: LstmGrads<F>,
    lstm_proj: DenseGrads<F>,
    fuse1: DenseGrads<F>,
    fuse2: DenseGrads<F>,
}

const GATE_TAGS: [&str; 4] = ["input", "forget", "output", "cand"];

/// Canonical buffer names for a descriptor, in serialization order.
pub fn buffer_names(with_decoder: bool) -> Vec<String> {
    let mut v = Vec::with_capacity(68);
    let dense = |v: &mut Vec<String>, stem: &str| {
        v.push(format!("{stem}.w"));
        v.push(format!("{stem}.b"));
    };
    dense(&mut v, "ae.enc1");
    dense(&mut v, "ae.enc2");
    if with_decoder {
        dense(&mut v, "ae.dec1");
        dense(&mut v, "ae.dec2");
    }
    dense(&mut v, "cnn.conv1");
    dense(&mut v, "cnn.conv2");
    dense(&mut v, "cnn.proj");
    for layer in ["lstm1", "lstm2"] {
        for dir in ["fwd", "bwd"] {
            for kind in ["wx", "wh", "b"] {
                for gate in GATE_TAGS {
                    v.push(format!("{layer}.{dir}.{kind}.{gate}"));
                }
            }
        }
    }
    dense(&mut v, "lstm.proj");
    dense(&mut v, "fusion.hidden");
    dense(&mut v, "fusion.out");
    v
}

impl<F: Scalar> FusedNet<F> {
    /// Builds a freshly initialized network. Identical `(arch, seed)` pairs
    /// produce bit-identical parameters.
    pub fn build(arch: ArchDescriptor, seed: u64) -> Result<FusedNet<F>> {
        arch.validate()?;
        let rng = &mut seeded_rng(seed);
        let d = arch.input_dim;
        let relu = Activation::Relu;
        let enc1 = DenseParams::new(d, arch.ae.encoder_width, relu, rng);
        let enc2 = DenseParams::new(arch.ae.encoder_width, arch.ae.bottleneck, relu, rng);
        // Linear reconstruction output: inputs are standardized, so targets
        // take both signs.
        let decoder = Some(Decoder {
            d1: DenseParams::new(arch.ae.bottleneck, arch.ae.decoder_width, relu, rng),
            d2: DenseParams::new(arch.ae.decoder_width, d, Activation::Linear, rng),
        });
        let conv1 = Conv1dParams::new(
            1,
            arch.cnn.filters1,
            arch.cnn.kernel,
            1,
            Padding::Same,
            relu,
            rng,
        )?;
        let conv2 = Conv1dParams::new(
            arch.cnn.filters1,
            arch.cnn.filters2,
            arch.cnn.kernel,
            1,
            Padding::Same,
            relu,
            rng,
        )?;
        let cnn_proj = DenseParams::new(arch.cnn.filters2, arch.cnn.projection, relu, rng);
        let l1f = LstmParams::new(d, arch.lstm.hidden1, FORGET_BIAS, rng)?;
        let l1b = LstmParams::new(d, arch.lstm.hidden1, FORGET_BIAS, rng)?;
        let l2f = LstmParams::new(arch.bilstm1_out(), arch.lstm.hidden2, FORGET_BIAS, rng)?;
        let l2b = LstmParams::new(arch.bilstm1_out(), arch.lstm.hidden2, FORGET_BIAS, rng)?;
        let lstm_proj = DenseParams::new(arch.bilstm2_out(), arch.lstm.projection, relu, rng);
        let fuse1 = DenseParams::new(arch.fusion_input_dim(), arch.fusion.hidden, relu, rng);
        let fuse2 = DenseParams::new(arch.fusion.hidden, 1, Activation::Sigmoid, rng);
        Ok(FusedNet {
            arch,
            enc1,
            enc2,
            decoder,
            conv1,
            conv2,
            cnn_proj,
            l1f,
            l1b,
            l2f,
            l2b,
            lstm_proj,
            fuse1,
            fuse2,
        })
    }

    pub fn arch(&self) -> &ArchDescriptor {
        &self.arch
    }

    pub fn has_decoder(&self) -> bool {
        self.decoder.is_some()
    }

    /// Removes the reconstruction decoder for deployment. Inference output
    /// is unchanged; training is no longer possible.
    pub fn strip_decoder(&mut self) {
        self.decoder = None;
    }

    fn check_input(&self, x: &Tensor2<F>) -> Result<()> {
        if x.cols() != self.arch.input_dim {
            return Err(ModelError::Nn(NnError::DimensionMismatch {
                op: "fused forward",
                expected: format!("{} features", self.arch.input_dim),
                got: format!("{}", x.cols()),
            }));
        }
        if x.rows() == 0 {
            return Err(ModelError::Nn(NnError::InvalidParameter(
                "fused forward: empty batch".into(),
            )));
        }
        Ok(())
    }

    /// Full training-mode forward pass: probabilities, reconstructions, and
    /// the cache for [`FusedNet::backward`]. Dropout is active exactly when
    /// `dropout_rng` is provided. Requires the decoder.
    pub fn forward_train(
        &self,
        x: &Tensor2<F>,
        mut dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(Vec<F>, Tensor2<F>, BatchCache<F>)> {
        self.check_input(x)?;
        let decoder = self.decoder.as_ref().ok_or_else(|| {
            ModelError::Arch("decoder has been stripped; training-mode forward unavailable".into())
        })?;
        let n = x.rows();

        // Dense branch with auxiliary reconstruction.
        let (h1, enc1_cache) = self.enc1.forward(x)?;
        let (h1d, enc1_mask) = maybe_dropout(&h1, self.arch.ae.dropout, &mut dropout_rng)?;
        let (z, enc2_cache) = self.enc2.forward(&h1d)?;
        let (dh, dec1_cache) = decoder.d1.forward(&z)?;
        let (recon, dec2_cache) = decoder.d2.forward(&dh)?;

        // Convolutional branch, one sample at a time (layouts are per-row).
        let mut conv1_c = Vec::with_capacity(n);
        let mut pool1_c = Vec::with_capacity(n);
        let mut conv2_c = Vec::with_capacity(n);
        let mut gpool_c = Vec::with_capacity(n);
        let mut cnn_embed = Tensor2::zeros(n, self.arch.cnn.filters2);
        for i in 0..n {
            let xi = Tensor2::from_vec(self.arch.input_dim, 1, x.row(i).to_vec())?;
            let (c1, c1c) = self.conv1.forward(&xi)?;
            let (p1, p1c) = maxpool1d(&c1, self.arch.cnn.pool)?;
            let (c2, c2c) = self.conv2.forward(&p1)?;
            let (g, gc) = global_maxpool(&c2)?;
            cnn_embed.row_mut(i).copy_from_slice(g.row(0));
            conv1_c.push(c1c);
            pool1_c.push(p1c);
            conv2_c.push(c2c);
            gpool_c.push(gc);
        }
        let (cnn_out, cnn_proj_cache) = self.cnn_proj.forward(&cnn_embed)?;

        // Recurrent branch: each row is a one-step sequence of D features.
        let mut l1_c = Vec::with_capacity(n);
        let mut l2_c = Vec::with_capacity(n);
        let mut l2_embed = Tensor2::zeros(n, self.arch.bilstm2_out());
        for i in 0..n {
            let seq = Tensor2::from_row_slice(x.row(i));
            let (s1, c1) = bilstm_forward(&seq, &self.l1f, &self.l1b, true)?;
            let (s2, c2) = bilstm_forward(&s1, &self.l2f, &self.l2b, false)?;
            l2_embed.row_mut(i).copy_from_slice(s2.row(0));
            l1_c.push(c1);
            l2_c.push(c2);
        }
        let (lstm_out, lstm_proj_cache) = self.lstm_proj.forward(&l2_embed)?;

        // Fusion head over [bottleneck | conv embedding | recurrent embedding].
        let concat = concat3(&z, &cnn_out, &lstm_out)?;
        let (f1, fuse1_cache) = self.fuse1.forward(&concat)?;
        let (f1d, fuse_mask) = maybe_dropout(&f1, self.arch.fusion.dropout, &mut dropout_rng)?;
        let (pout, fuse2_cache) = self.fuse2.forward(&f1d)?;

        let cache = BatchCache {
            rows: n,
            enc1: enc1_cache,
            enc1_mask,
            enc2: enc2_cache,
            dec1: dec1_cache,
            dec2: dec2_cache,
            conv1: conv1_c,
            pool1: pool1_c,
            conv2: conv2_c,
            gpool: gpool_c,
            cnn_proj: cnn_proj_cache,
            l1: l1_c,
            l2: l2_c,
            lstm_proj: lstm_proj_cache,
            fuse1: fuse1_cache,
            fuse_mask,
            fuse2: fuse2_cache,
        };
        Ok((pout.data().to_vec(), recon, cache))
    }

    /// Deployment path: no dropout, no caches, decoder never touched.
    /// Matches `forward_train` with dropout disabled bit for bit.
    pub fn forward_infer(&self, x: &Tensor2<F>) -> Result<Vec<F>> {
        self.check_input(x)?;
        let n = x.rows();
        let h1 = self.enc1.forward_no_cache(x)?;
        let z = self.enc2.forward_no_cache(&h1)?;

        let mut cnn_embed = Tensor2::zeros(n, self.arch.cnn.filters2);
        for i in 0..n {
            let xi = Tensor2::from_vec(self.arch.input_dim, 1, x.row(i).to_vec())?;
            let c1 = self.conv1.forward_no_cache(&xi)?;
            let (p1, _) = maxpool1d(&c1, self.arch.cnn.pool)?;
            let c2 = self.conv2.forward_no_cache(&p1)?;
            let (g, _) = global_maxpool(&c2)?;
            cnn_embed.row_mut(i).copy_from_slice(g.row(0));
        }
        let cnn_out = self.cnn_proj.forward_no_cache(&cnn_embed)?;

        let mut l2_embed = Tensor2::zeros(n, self.arch.bilstm2_out());
        for i in 0..n {
            let seq = Tensor2::from_row_slice(x.row(i));
            let (s1, _) = bilstm_forward(&seq, &self.l1f, &self.l1b, true)?;
            let (s2, _) = bilstm_forward(&s1, &self.l2f, &self.l2b, false)?;
            l2_embed.row_mut(i).copy_from_slice(s2.row(0));
        }
        let lstm_out = self.lstm_proj.forward_no_cache(&l2_embed)?;

        let concat = concat3(&z, &cnn_out, &lstm_out)?;
        let f1 = self.fuse1.forward_no_cache(&concat)?;
        let pout = self.fuse2.forward_no_cache(&f1)?;
        Ok(pout.data().to_vec())
    }

    /// Backpropagates `d(loss)/d(probabilities)` and (already scaled)
    /// `d(loss)/d(reconstruction)` through every branch, accumulating into
    /// `grads`. The L2 penalty gradient is NOT added here; see
    /// [`FusedNet::loss_and_grads`].
    pub fn backward(
        &self,
        cache: &BatchCache<F>,
        dprobs: &[F],
        drecon: &Tensor2<F>,
        grads: &mut FusedGrads<F>,
    ) -> Result<()> {
        let decoder = self.decoder.as_ref().ok_or_else(|| {
            ModelError::Arch("decoder has been stripped; backward unavailable".into())
        })?;
        let n = cache.rows;
        if dprobs.len() != n {
            return Err(ModelError::Nn(NnError::DimensionMismatch {
                op: "fused backward",
                expected: format!("{n} probability gradients"),
                got: dprobs.len().to_string(),
            }));
        }

        // Fusion head.
        let dy = Tensor2::from_vec(n, 1, dprobs.to_vec())?;
        let d_f1d = self.fuse2.backward(&cache.fuse2, &dy, &mut grads.fuse2)?;
        let d_f1 = match &cache.fuse_mask {
            Some(m) => dropout_backward(&d_f1d, m)?,
            None => d_f1d,
        };
        let d_concat = self.fuse1.backward(&cache.fuse1, &d_f1, &mut grads.fuse1)?;
        let (mut d_z, d_cnn, d_lstm) = split3(
            &d_concat,
            self.arch.ae.bottleneck,
            self.arch.cnn.projection,
            self.arch.lstm.projection,
        )?;

        // Decoder path adds its pull on the bottleneck.
        let d_dh = decoder.d2.backward(&cache.dec2, drecon, &mut grads.dec2)?;
        let d_z_recon = decoder.d1.backward(&cache.dec1, &d_dh, &mut grads.dec1)?;
        d_z.add_scaled(&d_z_recon, F::one())?;

        // Encoder.
        let d_h1d = self.enc2.backward(&cache.enc2, &d_z, &mut grads.enc2)?;
        let d_h1 = match &cache.enc1_mask {
            Some(m) => dropout_backward(&d_h1d, m)?,
            None => d_h1d,
        };
        self.enc1.backward(&cache.enc1, &d_h1, &mut grads.enc1)?;

        // Convolutional branch.
        let d_embed = self
            .cnn_proj
            .backward(&cache.cnn_proj, &d_cnn, &mut grads.cnn_proj)?;
        for i in 0..n {
            let dg = Tensor2::from_row_slice(d_embed.row(i));
            let dc2 = global_maxpool_backward(&dg, &cache.gpool[i])?;
            let dp1 = self
                .conv2
                .backward(&cache.conv2[i], &dc2, &mut grads.conv2)?;
            let dc1 = maxpool1d_backward(&dp1, &cache.pool1[i])?;
            self.conv1
                .backward(&cache.conv1[i], &dc1, &mut grads.conv1)?;
        }

        // Recurrent branch.
        let d_l2e = self
            .lstm_proj
            .backward(&cache.lstm_proj, &d_lstm, &mut grads.lstm_proj)?;
        for i in 0..n {
            let dy2 = Tensor2::from_row_slice(d_l2e.row(i));
            let ds1 = bilstm_backward(
                &dy2,
                &self.l2f,
                &self.l2b,
                &cache.l2[i],
                &mut grads.l2f,
                &mut grads.l2b,
            )?;
            bilstm_backward(
                &ds1,
                &self.l1f,
                &self.l1b,
                &cache.l1[i],
                &mut grads.l1f,
                &mut grads.l1b,
            )?;
        }
        Ok(())
    }

    /// One full training-mode pass: composite loss, probabilities, and all
    /// parameter gradients (including the L2 pull on the fusion hidden
    /// weights) accumulated into `grads`.
    pub fn loss_and_grads(
        &self,
        x: &Tensor2<F>,
        targets: &[F],
        dropout_rng: Option<&mut ChaCha8Rng>,
        grads: &mut FusedGrads<F>,
    ) -> Result<(LossTerms<F>, Vec<F>)> {
        let (probs, recon, cache) = self.forward_train(x, dropout_rng)?;
        let terms = composite_loss(
            &probs,
            targets,
            &recon,
            x,
            self.arch.lambda_recon,
            self.arch.lambda_l2,
            &self.fuse1.w,
        )?;
        let dprobs = bce_grad(&probs, targets)?;
        let mut drecon = mse_grad(&recon, x)?;
        drecon.scale_in_place(F::from_f64(self.arch.lambda_recon));
        self.backward(&cache, &dprobs, &drecon, grads)?;
        grads
            .fuse1
            .dw
            .add_scaled(&self.fuse1.w, F::from_f64(2.0 * self.arch.lambda_l2))?;
        Ok((terms, probs))
    }

    /// All parameter buffers with canonical names, in serialization order.
    pub fn named_buffers(&self) -> Vec<(String, &[F])> {
        let mut v: Vec<(String, &[F])> = Vec::with_capacity(68);
        push_dense(&mut v, "ae.enc1", &self.enc1);
        push_dense(&mut v, "ae.enc2", &self.enc2);
        if let Some(dec) = &self.decoder {
            push_dense(&mut v, "ae.dec1", &dec.d1);
            push_dense(&mut v, "ae.dec2", &dec.d2);
        }
        push_conv(&mut v, "cnn.conv1", &self.conv1);
        push_conv(&mut v, "cnn.conv2", &self.conv2);
        push_dense(&mut v, "cnn.proj", &self.cnn_proj);
        push_lstm(&mut v, "lstm1.fwd", &self.l1f);
        push_lstm(&mut v, "lstm1.bwd", &self.l1b);
        push_lstm(&mut v, "lstm2.fwd", &self.l2f);
        push_lstm(&mut v, "lstm2.bwd", &self.l2b);
        push_dense(&mut v, "lstm.proj", &self.lstm_proj);
        push_dense(&mut v, "fusion.hidden", &self.fuse1);
        push_dense(&mut v, "fusion.out", &self.fuse2);
        v
    }

    /// Mutable view of every buffer, same names and order as
    /// [`FusedNet::named_buffers`].
    pub fn named_buffers_mut(&mut self) -> Vec<(String, &mut [F])> {
        let mut v: Vec<(String, &mut [F])> = Vec::with_capacity(68);
        push_dense_mut(&mut v, "ae.enc1", &mut self.enc1);
        push_dense_mut(&mut v, "ae.enc2", &mut self.enc2);
        if let Some(dec) = &mut self.decoder {
            push_dense_mut(&mut v, "ae.dec1", &mut dec.d1);
            push_dense_mut(&mut v, "ae.dec2", &mut dec.d2);
        }
        push_conv_mut(&mut v, "cnn.conv1", &mut self.conv1);
        push_conv_mut(&mut v, "cnn.conv2", &mut self.conv2);
        push_dense_mut(&mut v, "cnn.proj", &mut self.cnn_proj);
        push_lstm_mut(&mut v, "lstm1.fwd", &mut self.l1f);
        push_lstm_mut(&mut v, "lstm1.bwd", &mut self.l1b);
        push_lstm_mut(&mut v, "lstm2.fwd", &mut self.l2f);
        push_lstm_mut(&mut v, "lstm2.bwd", &mut self.l2b);
        push_dense_mut(&mut v, "lstm.proj", &mut self.lstm_proj);
        push_dense_mut(&mut v, "fusion.hidden", &mut self.fuse1);
        push_dense_mut(&mut v, "fusion.out", &mut self.fuse2);
        v
    }

    /// Total scalar parameter count of the buffers actually present.
    pub fn param_count(&self) -> usize {
        self.named_buffers().iter().map(|(_, b)| b.len()).sum()
    }

    /// Copy with every buffer widened (or narrowed) to 64-bit.
    pub fn to_f64(&self) -> FusedNet<f64> {
        let mut out =
            FusedNet::<f64>::build(self.arch.clone(), 0).expect("arch validated at build");
        if self.decoder.is_none() {
            out.decoder = None;
        }
        let src = self.named_buffers();
        for ((_, s), (_, d)) in src.iter().zip(out.named_buffers_mut()) {
            for (dv, sv) in d.iter_mut().zip(s.iter()) {
                *dv = sv.as_f64();
            }
        }
        out
    }
}

impl<F: Scalar> FusedGrads<F> {
    /// Zeroed accumulators shaped for a descriptor (decoder always
    /// included; only nets with a decoder can train).
    pub fn zeros(arch: &ArchDescriptor) -> FusedGrads<F> {
        let d = arch.input_dim;
        let dense = |i: usize, o: usize| DenseGrads {
            dw: Tensor2::zeros(i, o),
            db: vec![F::zero(); o],
        };
        let conv = |k: usize, cin: usize, cout: usize| Conv1dGrads {
            dw: Tensor2::zeros(k * cin, cout),
            db: vec![F::zero(); cout],
        };
        let lstm = |i: usize, h: usize| LstmGrads {
            dwx: std::array::from_fn(|_| Tensor2::zeros(i, h)),
            dwh: std::array::from_fn(|_| Tensor2::zeros(h, h)),
            db: std::array::from_fn(|_| vec![F::zero(); h]),
        };
        FusedGrads {
            enc1: dense(d, arch.ae.encoder_width),
            enc2: dense(arch.ae.encoder_width, arch.ae.bottleneck),
            dec1: dense(arch.ae.bottleneck, arch.ae.decoder_width),
            dec2: dense(arch.ae.decoder_width, d),
            conv1: conv(arch.cnn.kernel, 1, arch.cnn.filters1),
            conv2: conv(arch.cnn.kernel, arch.cnn.filters1, arch.cnn.filters2),
            cnn_proj: dense(arch.cnn.filters2, arch.cnn.projection),
            l1f: lstm(d, arch.lstm.hidden1),
            l1b: lstm(d, arch.lstm.hidden1),
            l2f: lstm(arch.bilstm1_out(), arch.lstm.hidden2),
            l2b: lstm(arch.bilstm1_out(), arch.lstm.hidden2),
            lstm_proj: dense(arch.bilstm2_out(), arch.lstm.projection),
            fuse1: dense(arch.fusion_input_dim(), arch.fusion.hidden),
            fuse2: dense(arch.fusion.hidden, 1),
        }
    }

    pub fn zero(&mut self) {
        self.enc1.zero();
        self.enc2.zero();
        self.dec1.zero();
        self.dec2.zero();
        self.conv1.zero();
        self.conv2.zero();
        self.cnn_proj.zero();
        self.l1f.zero();
        self.l1b.zero();
        self.l2f.zero();
        self.l2b.zero();
        self.lstm_proj.zero();
        self.fuse1.zero();
        self.fuse2.zero();
    }

    /// Gradient slices in the same order as a decoder-bearing net's
    /// [`FusedNet::named_buffers`].
    pub fn views(&self) -> Vec<&[F]> {
        let mut v: Vec<&[F]> = Vec::with_capacity(68);
        v.push(self.enc1.dw.data());
        v.push(&self.enc1.db);
        v.push(self.enc2.dw.data());
        v.push(&self.enc2.db);
        v.push(self.dec1.dw.data());
        v.push(&self.dec1.db);
        v.push(self.dec2.dw.data());
        v.push(&self.dec2.db);
        v.push(self.conv1.dw.data());
        v.push(&self.conv1.db);
        v.push(self.conv2.dw.data());
        v.push(&self.conv2.db);
        v.push(self.cnn_proj.dw.data());
        v.push(&self.cnn_proj.db);
        for g in [&self.l1f, &self.l1b, &self.l2f, &self.l2b] {
            for t in &g.dwx {
                v.push(t.data());
            }
            for t in &g.dwh {
                v.push(t.data());
            }
            for b in &g.db {
                v.push(b.as_slice());
            }
        }
        v.push(self.lstm_proj.dw.data());
        v.push(&self.lstm_proj.db);
        v.push(self.fuse1.dw.data());
        v.push(&self.fuse1.db);
        v.push(self.fuse2.dw.data());
        v.push(&self.fuse2.db);
        v
    }
}

fn maybe_dropout<F: Scalar>(
    x: &Tensor2<F>,
    rate: f64,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> Result<(Tensor2<F>, Option<Tensor2<F>>)> {
    match rng.as_deref_mut() {
        Some(r) => Ok(dropout(x, rate, true, r)?),
        None => Ok((x.clone(), None)),
    }
}

/// Row-wise `[a | b | c]`.
fn concat3<F: Scalar>(a: &Tensor2<F>, b: &Tensor2<F>, c: &Tensor2<F>) -> Result<Tensor2<F>> {
    let n = a.rows();
    if b.rows() != n || c.rows() != n {
        return Err(ModelError::Nn(NnError::DimensionMismatch {
            op: "concat",
            expected: format!("{n} rows in every branch"),
            got: format!("{}/{}/{}", a.rows(), b.rows(), c.rows()),
        }));
    }
    let (wa, wb, wc) = (a.cols(), b.cols(), c.cols());
    let mut out = Tensor2::zeros(n, wa + wb + wc);
    for i in 0..n {
        let row = out.row_mut(i);
        row[..wa].copy_from_slice(a.row(i));
        row[wa..wa + wb].copy_from_slice(b.row(i));
        row[wa + wb..].copy_from_slice(c.row(i));
    }
    Ok(out)
}

/// Inverse of [`concat3`] for gradients.
fn split3<F: Scalar>(
    x: &Tensor2<F>,
    wa: usize,
    wb: usize,
    wc: usize,
) -> Result<(Tensor2<F>, Tensor2<F>, Tensor2<F>)> {
    if x.cols() != wa + wb + wc {
        return Err(ModelError::Nn(NnError::DimensionMismatch {
            op: "split",
            expected: format!("{} columns", wa + wb + wc),
            got: x.cols().to_string(),
        }));
    }
    let n = x.rows();
    let mut a = Tensor2::zeros(n, wa);
    let mut b = Tensor2::zeros(n, wb);
    let mut c = Tensor2::zeros(n, wc);
    for i in 0..n {
        let row = x.row(i);
        a.row_mut(i).copy_from_slice(&row[..wa]);
        b.row_mut(i).copy_from_slice(&row[wa..wa + wb]);
        c.row_mut(i).copy_from_slice(&row[wa + wb..]);
    }
    Ok((a, b, c))
}

fn push_dense<'a, F: Scalar>(v: &mut Vec<(String, &'a [F])>, stem: &str, p: &'a DenseParams<F>) {
    v.push((format!("{stem}.w"), p.w.data()));
    v.push((format!("{stem}.b"), p.b.as_slice()));
}

fn push_dense_mut<'a, F: Scalar>(
    v: &mut Vec<(String, &'a mut [F])>,
    stem: &str,
    p: &'a mut DenseParams<F>,
) {
    v.push((format!("{stem}.w"), p.w.data_mut()));
    v.push((format!("{stem}.b"), p.b.as_mut_slice()));
}

fn push_conv<'a, F: Scalar>(v: &mut Vec<(String, &'a [F])>, stem: &str, p: &'a Conv1dParams<F>) {
    v.push((format!("{stem}.w"), p.w.data()));
    v.push((format!("{stem}.b"), p.b.as_slice()));
}

fn push_conv_mut<'a, F: Scalar>(
    v: &mut Vec<(String, &'a mut [F])>,
    stem: &str,
    p: &'a mut Conv1dParams<F>,
) {
    v.push((format!("{stem}.w"), p.w.data_mut()));
    v.push((format!("{stem}.b"), p.b.as_mut_slice()));
}

fn push_lstm<'a, F: Scalar>(v: &mut Vec<(String, &'a [F])>, stem: &str, p: &'a LstmParams<F>) {
    for (g, t) in p.wx.iter().enumerate() {
        v.push((format!("{stem}.wx.{}", GATE_TAGS[g]), t.data()));
    }
    for (g, t) in p.wh.iter().enumerate() {
        v.push((format!("{stem}.wh.{}", GATE_TAGS[g]), t.data()));
    }
    for (g, b) in p.b.iter().enumerate() {
        v.push((format!("{stem}.b.{}", GATE_TAGS[g]), b.as_slice()));
    }
}

fn push_lstm_mut<'a, F: Scalar>(
    v: &mut Vec<(String, &'a mut [F])>,
    stem: &str,
    p: &'a mut LstmParams<F>,
) {
    for (g, t) in p.wx.iter_mut().enumerate() {
        v.push((format!("{stem}.wx.{}", GATE_TAGS[g]), t.data_mut()));
    }
    for (g, t) in p.wh.iter_mut().enumerate() {
        v.push((format!("{stem}.wh.{}", GATE_TAGS[g]), t.data_mut()));
    }
    for (g, b) in p.b.iter_mut().enumerate() {
        v.push((format!("{stem}.b.{}", GATE_TAGS[g]), b.as_mut_slice()));
    }
}
