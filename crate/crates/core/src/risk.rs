//! Shared helpers for quantile-based risk measures.

use crate::error::{FgmError, Result};

pub fn check_level(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa < 1.0 {
        Ok(())
    } else {
        Err(FgmError::InvalidLevel(kappa))
    }
}

/// Smallest `x >= 0` with `cdf(x) >= u`, found by bisection.
///
/// The bracket starts at `[0, hint]` and doubles until it holds the target.
/// Returns the upper end once the bracket is narrower than
/// `rel_tol * max(1, hi)`.
pub fn bisect_quantile(cdf: impl Fn(f64) -> f64, u: f64, hint: f64, rel_tol: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = if hint.is_finite() && hint > 0.0 { hint } else { 1.0 };
    let mut guard = 0;
    while cdf(hi) < u && guard < 2000 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
    }
    for _ in 0..400 {
        if hi - lo <= rel_tol * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if cdf(mid) >= u {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
