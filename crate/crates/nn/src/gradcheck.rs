//! Helpers for verifying analytic gradients against central differences.
//!
//! The drivers live in test code (they need mutable access to whatever owns
//! the parameters); this module fixes the numerical conventions so every
//! crate checks gradients the same way.

/// Perturbation used for central differences on `f64` parameters.
pub const CENTRAL_DIFF_STEP: f64 = 1e-5;

/// Acceptance threshold on [`relative_error`].
pub const GRAD_TOLERANCE: f64 = 1e-4;

/// Floor that keeps the relative error meaningful near zero.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// Scale-invariant discrepancy between an analytic and a numeric derivative:
/// `|a - n| / max(floor, |a|, |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / REL_ERROR_FLOOR.max(analytic.abs()).max(numeric.abs())
}

/// Central-difference derivative of `f` at `x`.
pub fn central_difference(mut f: impl FnMut(f64) -> f64, x: f64, step: f64) -> f64 {
    (f(x + step) - f(x - step)) / (2.0 * step)
}
