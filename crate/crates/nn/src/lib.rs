//! Small neural-network engine built on explicit forward/backward passes.
//!
//! The crate provides row-major 2-D tensors, dense / 1-D convolution /
//! pooling / LSTM layer primitives with hand-derived gradients, inverted
//! dropout, composite losses, and an adaptive-moment optimizer. Everything is
//! generic over the scalar type through [`Scalar`] (implemented for `f32` and
//! `f64`); the rest of the workspace instantiates `f64`, for which aliases
//! are exported at the crate root.
//!
//! Determinism is a hard requirement: all randomness flows through caller
//! supplied RNGs (see [`rng`]), and no operation depends on hash-map
//! iteration order or thread scheduling.

pub mod activation;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod error;
pub mod gradcheck;
pub mod loss;
pub mod lstm;
pub mod optim;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod tensor;

pub use activation::Activation;
pub use error::{NnError, Result};
pub use scalar::Scalar;
pub use tensor::Tensor2;

/// Double-precision tensor, the workspace default.
pub type Tensor2f64 = Tensor2<f64>;
/// Single-precision tensor.
pub type Tensor2f32 = Tensor2<f32>;
