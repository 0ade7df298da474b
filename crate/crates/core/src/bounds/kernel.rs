//! The Freedman tail kernel
//!
//! ```text
//! H(λ, ξ) = (ξ² / (λ + ξ²))^(λ + ξ²) · e^λ
//! ```
//!
//! bounds `P{max_k W_k ≥ λ}` for a supermartingale started at zero whose
//! increments are at most one and whose predictable quadratic variation is
//! at most `ξ²`. Everything here is evaluated through
//! `ln H = ξ² · g(λ/ξ²)` with `g(t) = t − (1 + t)·ln(1 + t)`, which never
//! forms the underflowing power directly.

use crate::error::{domain, Result};

/// Below this ratio `g(t)` is summed from its Taylor series; the direct
/// form loses digits to cancellation between `t` and `(1+t)ln(1+t)`.
const SERIES_CUTOFF: f64 = 0.05;

/// `g(t) = t − (1 + t) ln(1 + t)` for `t ≥ 0`.
///
/// `g(t) = −Σ_{n≥2} (−1)^n t^n / (n(n−1))`, accumulated smallest term last
/// with Kahan compensation.
pub(crate) fn g(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    if t < SERIES_CUTOFF {
        let mut terms = [0.0f64; 24];
        let mut power = t;
        for (i, slot) in terms.iter_mut().enumerate() {
            let n = (i + 2) as f64;
            power *= t;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            // power currently holds t^(i+2)
            *slot = -sign * power / (n * (n - 1.0));
        }
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for term in terms.iter().rev() {
            let y = term - comp;
            let s = sum + y;
            comp = (s - sum) - y;
            sum = s;
        }
        sum
    } else {
        t - (1.0 + t) * t.ln_1p()
    }
}

/// Natural log of the kernel, `ln H(λ, ξ)`. Always `≤ 0`.
pub fn ln_freedman_kernel(lambda: f64, xi: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(domain("freedman_kernel", format!("lambda must be >= 0, got {lambda}")));
    }
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(domain("freedman_kernel", format!("xi must be finite and > 0, got {xi}")));
    }
    if lambda == f64::INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let xi2 = xi * xi;
    Ok(xi2 * g(lambda / xi2))
}

/// `H(λ, ξ)`; returns exactly 1 at `λ = 0`.
pub fn freedman_kernel(lambda: f64, xi: f64) -> Result<f64> {
    ln_freedman_kernel(lambda, xi).map(f64::exp)
}

/// The exponent Freedman minimizes over `γ`:
/// `exp{(e^γ − 1 − γ)ξ² − γλ}`. At the optimal `γ = ln((λ+ξ²)/ξ²)` this
/// equals `H(λ, ξ)`.
pub fn freedman_exponent(gamma: f64, lambda: f64, xi: f64) -> f64 {
    let phi = gamma.exp_m1() - gamma;
    (phi * xi * xi - gamma * lambda).exp()
}

/// Minimizer of [`freedman_exponent`] in `γ`.
pub fn optimal_gamma(lambda: f64, xi: f64) -> f64 {
    (lambda / (xi * xi)).ln_1p()
}
