use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Element-wise nonlinearity applied after a layer's affine map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply<F: Scalar>(self, z: F) -> F {
        match self {
            Activation::Linear => z,
            Activation::Relu => {
                if z > F::zero() {
                    z
                } else {
                    F::zero()
                }
            }
            Activation::Sigmoid => F::one() / (F::one() + (-z).exp()),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output `y = apply(z)`.
    ///
    /// All four nonlinearities admit this form, which lets caches keep only
    /// the layer output. At the ReLU kink (`y == 0`) the subgradient 0 is
    /// used.
    #[inline]
    pub fn derivative_from_output<F: Scalar>(self, y: F) -> F {
        match self {
            Activation::Linear => F::one(),
            Activation::Relu => {
                if y > F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Activation::Sigmoid => y * (F::one() - y),
            Activation::Tanh => F::one() - y * y,
        }
    }

    pub fn apply_in_place<F: Scalar>(self, t: &mut Tensor2<F>) {
        if self == Activation::Linear {
            return;
        }
        t.map_in_place(|z| self.apply(z));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_midpoint_and_saturation() {
        assert_eq!(Activation::Sigmoid.apply(0.0f64), 0.5);
        assert!(Activation::Sigmoid.apply(40.0f64) > 1.0 - 1e-12);
        assert!(Activation::Sigmoid.apply(-40.0f64) < 1e-12);
    }

    #[test]
    fn relu_clamps_negatives() {
        assert_eq!(Activation::Relu.apply(-3.0f64), 0.0);
        assert_eq!(Activation::Relu.apply(3.0f64), 3.0);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let step = 1e-6;
        for act in [Activation::Sigmoid, Activation::Tanh, Activation::Linear] {
            for &z in &[-1.7f64, -0.3, 0.2, 1.1] {
                let y = act.apply(z);
                let numeric = (act.apply(z + step) - act.apply(z - step)) / (2.0 * step);
                let analytic = act.derivative_from_output(y);
                assert!(
                    (numeric - analytic).abs() < 1e-6,
                    "{act:?} at {z}: {numeric} vs {analytic}"
                );
            }
        }
        // ReLU away from the kink.
        assert_eq!(Activation::Relu.derivative_from_output(2.0f64), 1.0);
        assert_eq!(Activation::Relu.derivative_from_output(0.0f64), 0.0);
    }

    #[test]
    fn serde_names_are_snake_case() {
        assert_eq!(
            serde_json::to_string(&Activation::Relu).unwrap(),
            "\"relu\""
        );
        let a: Activation = serde_json::from_str("\"sigmoid\"").unwrap();
        assert_eq!(a, Activation::Sigmoid);
    }
}
