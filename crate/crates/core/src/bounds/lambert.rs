//! Lower real branch `W₋₁` of the Lambert W function and the zero of
//! `Ψ_φ(B) = 1/B − e^{(B−1)φ}` it locates.

use std::f64::consts::E;

use crate::error::{domain, Result};

const MAX_ITER: usize = 100;
const CONVERGENCE: f64 = 1e-13;

/// Branch-point series of `W` in `p = ±√(2(1 + e·x))`; the negative root
/// gives `W₋₁`.
fn branch_series(p: f64) -> f64 {
    const C: [f64; 7] = [
        -1.0,
        1.0,
        -1.0 / 3.0,
        11.0 / 72.0,
        -43.0 / 540.0,
        769.0 / 17280.0,
        -221.0 / 8505.0,
    ];
    C.iter().rev().fold(0.0, |acc, c| acc * p + c)
}

/// `W₋₁(x)` for `x ∈ [−1/e, 0)`: the solution `w ≤ −1` of `w e^w = x`.
///
/// Halley iteration seeded from the branch-point series near `−1/e` and
/// from the `ln(−x) − ln(−ln(−x))` asymptote near zero. Inputs within a few
/// ulps of `−1/e` return `−1`, since the branch is vertical there.
pub fn lambert_w_minus1(x: f64) -> Result<f64> {
    let branch = -(-1.0f64).exp();
    if !(x < 0.0) || x < branch - 4.0 * f64::EPSILON {
        return Err(domain(
            "lambert_w_minus1",
            format!("x must lie in [-1/e, 0), got {x}"),
        ));
    }
    let q = x.mul_add(E, 1.0).max(0.0);
    if q <= 8.0 * f64::EPSILON {
        return Ok(-1.0);
    }
    let p = -(2.0 * q).sqrt();
    if p > -1e-3 {
        return Ok(branch_series(p));
    }

    let mut w = if x < -0.25 {
        branch_series(p)
    } else {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let next = w - f / denom;
        let done = (next - w).abs() <= CONVERGENCE * (1.0 + next.abs());
        w = next.min(-1.0);
        if done {
            break;
        }
    }
    Ok(w)
}

/// `Ψ_φ(B) = 1/B − e^{(B−1)φ}`.
pub fn psi(phi: f64, b: f64) -> f64 {
    1.0 / b - ((b - 1.0) * phi).exp()
}

/// `W₋₁(φe^φ)/φ`: the largest zero of `Ψ_φ`, above which `Ψ_φ ≥ 0`.
///
/// Requires `φe^φ ∈ [−1/e, 0)`, i.e. `φ < 0`.
pub fn psi_threshold(phi: f64) -> Result<f64> {
    if !(phi < 0.0) || !phi.is_finite() {
        return Err(domain(
            "psi_threshold",
            format!("phi * e^phi must lie in [-1/e, 0), which needs phi < 0; got {phi}"),
        ));
    }
    Ok(lambert_w_minus1(phi * phi.exp())? / phi)
}
