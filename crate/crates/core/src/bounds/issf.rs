//! Input-to-state safety floors and the ε-expanded Freedman bound.

use super::{freedman_kernel, geometric_sum, BoundResult};
use crate::error::{domain, Result};

/// `Σ_{i=1}^{K} α^{2(K−i)} σ²/δ² = σ²(1 − α^{2K}) / (δ²(1 − α²))`.
///
/// Singular at `α = 1`; use `σ²K/δ²` there.
pub fn tightened_pqv(alpha: f64, horizon: u32, sigma: f64, delta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(
            "tightened_pqv",
            format!("alpha must lie in (0, 1), got {alpha}; use sigma^2 K / delta^2 at alpha = 1"),
        ));
    }
    if !(delta > 0.0) {
        return Err(domain("tightened_pqv", format!("delta must be > 0, got {delta}")));
    }
    Ok(sigma * sigma * geometric_sum(alpha * alpha, horizon) / (delta * delta))
}

/// Almost-sure floor `α^k h(x₀) − δ Σ_{i=0}^{k−1} α^i` on `h(x_k)`.
pub fn issf_worst_case(alpha: f64, delta: f64, h0: f64, k: u32) -> f64 {
    alpha.powi(k as i32) * h0 - delta * geometric_sum(alpha, k)
}

/// Level `−δ/(1 − α)` of the enlarged set that is forward invariant almost surely.
pub fn issf_safe_level(alpha: f64, delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(domain(
            "issf_safe_level",
            format!("alpha must lie in [0, 1), got {alpha}"),
        ));
    }
    Ok(-delta / (1.0 - alpha))
}

/// Bound on `P{min_{k≤K} h(x_k) < −ε}` for a DTCBF with `α ∈ (0, 1)`.
///
/// Zero whenever the almost-sure floor at `K` already sits above `−ε`.
pub fn stochastic_issf_bound(
    alpha: f64,
    horizon: u32,
    h0: f64,
    delta: f64,
    sigma: f64,
    epsilon: f64,
) -> Result<BoundResult> {
    if !(epsilon >= 0.0) {
        return Err(domain(
            "stochastic_issf_bound",
            format!("epsilon must be >= 0, got {epsilon}"),
        ));
    }
    if !(sigma > 0.0) {
        return Err(domain(
            "stochastic_issf_bound",
            format!("sigma must be > 0, got {sigma}"),
        ));
    }
    let pqv = tightened_pqv(alpha, horizon, sigma, delta)?;
    if -epsilon < issf_worst_case(alpha, delta, h0, horizon) {
        return Ok(BoundResult::from_raw(0.0));
    }
    let lambda = alpha.powi(horizon as i32) * (h0 + epsilon) / delta;
    if lambda < 0.0 {
        return Ok(BoundResult::from_raw(1.0));
    }
    Ok(BoundResult::from_raw(freedman_kernel(lambda, pqv.sqrt())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tightened_pqv_values() {
        for &a in &[0.1, 0.5, 0.99] {
            assert!((tightened_pqv(a, 1, 0.7, 2.0).unwrap() - 0.49 / 4.0).abs() < 1e-15);
        }
        // (1/9)(1 − 0.99^200)/(1 − 0.9801), 50-digit reference
        let v = tightened_pqv(0.99, 100, 1.0 / 3.0, 1.0).unwrap();
        assert!((v - 4.835_401_033_735_556).abs() < 1e-12);
        assert!(tightened_pqv(1.0, 10, 1.0, 1.0).is_err());
        assert!(tightened_pqv(0.0, 10, 1.0, 1.0).is_err());
    }

    #[test]
    fn tightened_pqv_below_plain_sum() {
        for &a in &[0.01, 0.3, 0.9, 0.999_9] {
            for &k in &[1u32, 2, 10, 1000] {
                let t = tightened_pqv(a, k, 0.4, 0.8).unwrap();
                let plain = 0.16 * f64::from(k) / 0.64;
                assert!(t <= plain * (1.0 + 1e-14));
                if k > 1 {
                    assert!(t < plain);
                }
            }
        }
    }

    #[test]
    fn worst_case_floor() {
        assert_eq!(issf_worst_case(0.7, 1.0, 3.0, 0), 3.0);
        assert_eq!(issf_worst_case(0.0, 1.0, 3.0, 1), -1.0);
        assert!((issf_worst_case(0.99, 1.0, 1.0, 1) + 0.01).abs() < 1e-15);
    }

    #[test]
    fn safe_level() {
        assert_eq!(issf_safe_level(0.0, 1.0).unwrap(), -1.0);
        assert!((issf_safe_level(0.99, 1.0).unwrap() + 100.0).abs() < 1e-9);
        assert_eq!(issf_safe_level(0.5, 2.0).unwrap(), -4.0);
        assert!(issf_safe_level(1.0, 1.0).is_err());
    }

    #[test]
    fn stochastic_issf_examples() {
        let r = stochastic_issf_bound(0.99, 1, 1.0, 1.0, 1.0 / 3.0, 2.0).unwrap();
        assert_eq!(r.raw, 0.0);
        let r = stochastic_issf_bound(0.99, 1, 1.0, 1.0, 1.0 / 3.0, 0.0).unwrap();
        let want = freedman_kernel(0.99, 1.0 / 3.0).unwrap();
        assert!((r.raw - want).abs() < 1e-15);
        // a finite floor always switches the indicator off eventually
        let floor = issf_worst_case(0.99, 1.0, 5.0, 50);
        let r = stochastic_issf_bound(0.99, 50, 5.0, 1.0, 1.0 / 3.0, -floor + 1.0).unwrap();
        assert_eq!(r.raw, 0.0);
    }
}
