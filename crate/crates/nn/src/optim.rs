use crate::error::{NnError, Result};
use crate::scalar::Scalar;

/// Adaptive-moment-estimation hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NnError::InvalidParameter(format!(
                "adam: learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(NnError::InvalidParameter(format!(
                    "adam: {name} must be in [0, 1), got {b}"
                )));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(NnError::InvalidParameter(format!(
                "adam: epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Adam optimizer over a flat list of parameter buffers.
///
/// First and second moment estimates are kept per buffer and sized lazily on
/// the first step; later steps insist on the same buffer layout. A step is
/// all-or-nothing: if any gradient entry is non-finite the step returns an
/// error before touching parameters or moments.
#[derive(Clone, Debug)]
pub struct Adam<F> {
    cfg: AdamConfig,
    step_count: u64,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
}

impl<F: Scalar> Adam<F> {
    pub fn new(cfg: AdamConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Adam {
            cfg,
            step_count: 0,
            m: Vec::new(),
            v: Vec::new(),
        })
    }

    #[inline]
    pub fn config(&self) -> &AdamConfig {
        &self.cfg
    }

    /// Number of completed update steps (bias correction uses this).
    #[inline]
    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one bias-corrected update to every `(parameter, gradient)`
    /// pair. Pairs must arrive in the same order with the same lengths on
    /// every call.
    pub fn step(&mut self, pairs: &mut [(&mut [F], &[F])]) -> Result<()> {
        // Validate everything before mutating anything.
        for (idx, (p, g)) in pairs.iter().enumerate() {
            if p.len() != g.len() {
                return Err(NnError::dim(
                    "adam step",
                    format!("gradient length {} for buffer {idx}", p.len()),
                    g.len().to_string(),
                ));
            }
            if let Some(bad) = g.iter().position(|x| !x.is_finite()) {
                return Err(NnError::NonFinite(format!(
                    "gradient buffer {idx} at element {bad}"
                )));
            }
        }
        if self.m.is_empty() {
            self.m = pairs
                .iter()
                .map(|(p, _)| vec![F::zero(); p.len()])
                .collect();
            self.v = self.m.clone();
        } else if self.m.len() != pairs.len()
            || self
                .m
                .iter()
                .zip(pairs.iter())
                .any(|(m, (p, _))| m.len() != p.len())
        {
            return Err(NnError::dim(
                "adam step",
                format!("{} buffers with stable lengths", self.m.len()),
                pairs.len().to_string(),
            ));
        }

        self.step_count += 1;
        let t = self.step_count as f64;
        let b1 = F::from_f64(self.cfg.beta1);
        let b2 = F::from_f64(self.cfg.beta2);
        let one = F::one();
        let lr = F::from_f64(self.cfg.learning_rate);
        let eps = F::from_f64(self.cfg.epsilon);
        let bc1 = F::from_f64(1.0 - self.cfg.beta1.powf(t));
        let bc2 = F::from_f64(1.0 - self.cfg.beta2.powf(t));

        for (idx, (p, g)) in pairs.iter_mut().enumerate() {
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            for j in 0..p.len() {
                let gj = g[j];
                m[j] = b1 * m[j] + (one - b1) * gj;
                v[j] = b2 * v[j] + (one - b2) * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
