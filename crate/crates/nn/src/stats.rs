use crate::error::{NnError, Result};
use crate::scalar::Scalar;

/// Sorts a slice of finite scalars ascending.
///
/// Panics on NaN; callers validate finiteness at ingest.
pub fn sort_scalars<F: Scalar>(v: &mut [F]) {
    v.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values are totally ordered"));
}

/// Linear-interpolation quantile of an ascending-sorted, non-empty slice.
///
/// Uses the `h = q * (n - 1)` definition: the result is
/// `v[floor(h)] + frac(h) * (v[floor(h)+1] - v[floor(h)])`.
pub fn quantile_sorted<F: Scalar>(sorted: &[F], q: f64) -> Result<F> {
    if sorted.is_empty() {
        return Err(NnError::InvalidParameter("quantile of empty slice".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(NnError::InvalidParameter(format!(
            "quantile must be in [0, 1], got {q}"
        )));
    }
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        return Ok(sorted[lo]);
    }
    Ok(sorted[lo] + F::from_f64(frac) * (sorted[lo + 1] - sorted[lo]))
}

/// Median of an ascending-sorted, non-empty slice (even lengths average the
/// two middle elements).
pub fn median_sorted<F: Scalar>(sorted: &[F]) -> Result<F> {
    quantile_sorted(sorted, 0.5)
}
