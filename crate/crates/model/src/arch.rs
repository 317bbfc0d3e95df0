use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Shape of the three-branch detector. Every width is explicit so toy
/// configurations build the same code path as the full one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchDescriptor {
    pub input_dim: usize,
    pub ae: AeSpec,
    pub cnn: CnnSpec,
    pub lstm: LstmSpec,
    pub fusion: FusionSpec,
    /// Weight of the reconstruction term in the composite loss.
    pub lambda_recon: f64,
    /// Weight of the L2 penalty on the fusion hidden layer's weights.
    pub lambda_l2: f64,
}

/// Dense encoder/decoder pair; the bottleneck output feeds the fusion head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AeSpec {
    pub encoder_width: usize,
    pub bottleneck: usize,
    pub decoder_width: usize,
    pub dropout: f64,
}

/// Two stacked convolutions over the feature axis (treated as a length-D,
/// one-channel signal), pooled down to a fixed-width embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CnnSpec {
    pub filters1: usize,
    pub filters2: usize,
    pub kernel: usize,
    pub pool: usize,
    pub projection: usize,
}

/// Two stacked bidirectional recurrent layers over a length-1 sequence of
/// all D features, projected to a fixed-width embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LstmSpec {
    pub hidden1: usize,
    pub hidden2: usize,
    pub projection: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionSpec {
    pub hidden: usize,
    pub dropout: f64,
}

impl ArchDescriptor {
    /// The reference configuration: encoder 128 to a 64-wide bottleneck,
    /// conv filters 64 then 128 with a 64-wide projection, bidirectional
    /// hidden sizes 64 then 32 with a 64-wide projection, fusion hidden 128.
    pub fn standard(input_dim: usize) -> ArchDescriptor {
        ArchDescriptor {
            input_dim,
            ae: AeSpec {
                encoder_width: 128,
                bottleneck: 64,
                decoder_width: 128,
                dropout: 0.2,
            },
            cnn: CnnSpec {
                filters1: 64,
                filters2: 128,
                kernel: 3,
                pool: 2,
                projection: 64,
            },
            lstm: LstmSpec {
                hidden1: 64,
                hidden2: 32,
                projection: 64,
            },
            fusion: FusionSpec {
                hidden: 128,
                dropout: 0.4,
            },
            lambda_recon: 0.1,
            lambda_l2: 1e-4,
        }
    }

    /// A shrunken configuration exercising every layer kind, small enough
    /// for exhaustive finite-difference checks.
    pub fn toy(input_dim: usize) -> ArchDescriptor {
        ArchDescriptor {
            input_dim,
            ae: AeSpec {
                encoder_width: 10,
                bottleneck: 6,
                decoder_width: 10,
                dropout: 0.2,
            },
            cnn: CnnSpec {
                filters1: 4,
                filters2: 6,
                kernel: 3,
                pool: 2,
                projection: 6,
            },
            lstm: LstmSpec {
                hidden1: 5,
                hidden2: 4,
                projection: 6,
            },
            fusion: FusionSpec {
                hidden: 12,
                dropout: 0.4,
            },
            lambda_recon: 0.1,
            lambda_l2: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("input_dim", self.input_dim),
            ("ae.encoder_width", self.ae.encoder_width),
            ("ae.bottleneck", self.ae.bottleneck),
            ("ae.decoder_width", self.ae.decoder_width),
            ("cnn.filters1", self.cnn.filters1),
            ("cnn.filters2", self.cnn.filters2),
            ("cnn.kernel", self.cnn.kernel),
            ("cnn.pool", self.cnn.pool),
            ("cnn.projection", self.cnn.projection),
            ("lstm.hidden1", self.lstm.hidden1),
            ("lstm.hidden2", self.lstm.hidden2),
            ("lstm.projection", self.lstm.projection),
            ("fusion.hidden", self.fusion.hidden),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ModelError::Arch(format!("{name} must be positive")));
            }
        }
        for (name, r) in [
            ("ae.dropout", self.ae.dropout),
            ("fusion.dropout", self.fusion.dropout),
        ] {
            if !(0.0..1.0).contains(&r) {
                return Err(ModelError::Arch(format!(
                    "{name} must be in [0, 1), got {r}"
                )));
            }
        }
        for (name, l) in [
            ("lambda_recon", self.lambda_recon),
            ("lambda_l2", self.lambda_l2),
        ] {
            if !(l.is_finite() && l >= 0.0) {
                return Err(ModelError::Arch(format!(
                    "{name} must be finite and non-negative, got {l}"
                )));
            }
        }
        Ok(())
    }

    /// Width of the concatenated branch embeddings entering the fusion head.
    pub fn fusion_input_dim(&self) -> usize {
        self.ae.bottleneck + self.cnn.projection + self.lstm.projection
    }

    /// Output width of the first bidirectional layer (both directions).
    pub fn bilstm1_out(&self) -> usize {
        2 * self.lstm.hidden1
    }

    /// Output width of the second bidirectional layer (both directions).
    pub fn bilstm2_out(&self) -> usize {
        2 * self.lstm.hidden2
    }

    /// Total scalar parameter count, by layer-shape arithmetic.
    pub fn param_count(&self, with_decoder: bool) -> usize {
        let d = self.input_dim;
        let dense = |i: usize, o: usize| i * o + o;
        let lstm_dir = |i: usize, h: usize| 4 * (i * h + h * h + h);
        let mut n =
            dense(d, self.ae.encoder_width) + dense(self.ae.encoder_width, self.ae.bottleneck);
        if with_decoder {
            n += dense(self.ae.bottleneck, self.ae.decoder_width) + dense(self.ae.decoder_width, d);
        }
        n += self.cnn.kernel * self.cnn.filters1 + self.cnn.filters1;
        n += self.cnn.kernel * self.cnn.filters1 * self.cnn.filters2 + self.cnn.filters2;
        n += dense(self.cnn.filters2, self.cnn.projection);
        n += 2 * lstm_dir(d, self.lstm.hidden1);
        n += 2 * lstm_dir(self.bilstm1_out(), self.lstm.hidden2);
        n += dense(self.bilstm2_out(), self.lstm.projection);
        n += dense(self.fusion_input_dim(), self.fusion.hidden);
        n += dense(self.fusion.hidden, 1);
        n
    }
}
