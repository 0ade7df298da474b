//! When the Freedman bound beats the Ville bound, plus the Ville-type
//! bounds of the earlier literature and the constructive `δ`/`σ²` recipes.

use super::{freedman_kernel, BoundResult};
use crate::error::{domain, Result};

/// `φ = 2 ln 2 − 1`.
pub const PHI: f64 = 2.0 * std::f64::consts::LN_2 - 1.0;

/// The two sufficient conditions `λδ ≥ σ²K` and `λ ≤ B − δ/φ` under which
/// `H(λ/δ, σ√K/δ) ≤ 1 − λ/B`.
pub fn comparison_conditions(
    lambda: f64,
    delta: f64,
    sigma: f64,
    horizon: u32,
    upper_bound: f64,
) -> (bool, bool) {
    let k = f64::from(horizon);
    (
        lambda * delta >= sigma * sigma * k,
        lambda <= upper_bound - delta / PHI,
    )
}

/// `Δ = 1 − λ/B − H(λ/δ, σ√K/δ)`.
pub fn dominance_gap(
    lambda: f64,
    upper_bound: f64,
    sigma: f64,
    horizon: u32,
    delta: f64,
) -> Result<f64> {
    let xi = sigma * f64::from(horizon).sqrt() / delta;
    Ok(1.0 - lambda / upper_bound - freedman_kernel(lambda / delta, xi)?)
}

/// Factors `(a, b)` of `∂Δ/∂(σ²) = a·b`:
///
/// ```text
/// a = −e^{λ/δ} / (δ²σ²) · u^{(λδ + σ²K)/δ²},   u = σ²K / (λδ + σ²K)
/// b = σ²K ln u + λδ
/// ```
///
/// `a < 0` always and `b ≥ 0` by `ln r ≥ 1 − 1/r`.
pub fn dominance_gap_dsigma2_factors(
    lambda: f64,
    sigma: f64,
    horizon: u32,
    delta: f64,
) -> Result<(f64, f64)> {
    if !(sigma > 0.0) {
        return Err(domain(
            "dominance_gap_dsigma2",
            format!("sigma must be > 0, got {sigma}"),
        ));
    }
    let s2k = sigma * sigma * f64::from(horizon);
    let ld = lambda * delta;
    // u^v · e^{λ/δ} is exactly H(λ/δ, σ√K/δ)
    let h = freedman_kernel(lambda / delta, s2k.sqrt() / delta)?;
    let a = -h / (delta * delta * sigma * sigma);
    let ln_u = -(ld / s2k).ln_1p();
    let b = s2k * ln_u + ld;
    Ok((a, b))
}

/// `∂Δ/∂(σ²)` through the `a·b` factorization. Never positive.
pub fn dominance_gap_dsigma2(
    lambda: f64,
    _upper_bound: f64,
    sigma: f64,
    horizon: u32,
    delta: f64,
) -> Result<f64> {
    let (a, b) = dominance_gap_dsigma2_factors(lambda, sigma, horizon, delta)?;
    Ok(a * b)
}

/// Ville-type bound of the earlier barrier-certificate literature in this
/// crate's notation, dispatching on `(α, c)`:
///
/// * `c = 0`: `1 − α^K h₀/B`
/// * `α = 1, c > 0`: `1 − (h₀ − cK)/B`
/// * `c < 0`: `1 − (h₀/B)((αB − c)/B)^K`
/// * `α < 1, c > 0`: `1 − α^K h₀/(1 − α) · (c + (1 − α)B)/B`
pub fn santoyo_bound(alpha: f64, c: f64, horizon: u32, h0: f64, upper_bound: f64) -> BoundResult {
    let k = horizon as i32;
    let b = upper_bound;
    let raw = if c == 0.0 {
        1.0 - alpha.powi(k) * h0 / b
    } else if alpha == 1.0 && c > 0.0 {
        1.0 - (h0 - c * f64::from(horizon)) / b
    } else if c < 0.0 {
        1.0 - (h0 / b) * ((alpha * b - c) / b).powi(k)
    } else {
        1.0 - alpha.powi(k) * h0 / (1.0 - alpha) * ((c + (1.0 - alpha) * b) / b)
    };
    BoundResult::from_raw(raw)
}

/// Lipschitz recipe: `δ = 2 L_h d_max`, `σ² = L_h² d_max²`.
pub fn constructive_delta_sigma(lipschitz: f64, d_max: f64) -> Result<(f64, f64)> {
    if !(lipschitz >= 0.0) || !(d_max >= 0.0) {
        return Err(domain(
            "constructive_delta_sigma",
            format!("need L_h >= 0 and d_max >= 0, got {lipschitz}, {d_max}"),
        ));
    }
    Ok((2.0 * lipschitz * d_max, (lipschitz * d_max).powi(2)))
}

/// Bounds for the signed-distance barrier under a uniform-disk position
/// disturbance of radius `d_max`: `δ = (5/3) d_max`, `σ² = d_max²/2`.
pub fn hlip_delta_sigma(d_max: f64) -> Result<(f64, f64)> {
    if !(d_max >= 0.0) {
        return Err(domain(
            "hlip_delta_sigma",
            format!("d_max must be >= 0, got {d_max}"),
        ));
    }
    Ok((5.0 / 3.0 * d_max, d_max * d_max / 2.0))
}
