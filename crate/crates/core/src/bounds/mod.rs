//! Closed-form finite-horizon exit-probability bounds.
//!
//! Every function in this module is a pure function of its arguments. The
//! Ville-type bounds need an upper bound `B` on the barrier; the Freedman
//! bounds trade that for a bound `δ` on the worst predictable drop and a
//! bound `σ²` on the conditional variance of the barrier.

mod comparison;
mod issf;
mod kernel;
mod lambert;

pub use comparison::{
    comparison_conditions, constructive_delta_sigma, dominance_gap, dominance_gap_dsigma2,
    dominance_gap_dsigma2_factors, hlip_delta_sigma, santoyo_bound, PHI,
};
pub use issf::{issf_safe_level, issf_worst_case, stochastic_issf_bound, tightened_pqv};
pub use kernel::{freedman_exponent, freedman_kernel, ln_freedman_kernel, optimal_gamma};
pub use lambert::{lambert_w_minus1, psi, psi_threshold};


use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which expectation condition the closed loop satisfies at every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SafetyMode {
    /// `E[h(x_{k+1}) | F_k] ≥ α h(x_k)`
    Dtcbf { alpha: f64 },
    /// `E[h(x_{k+1}) | F_k] ≥ h(x_k) − c`
    CMart { c: f64 },
    /// `E[h(x_{k+1}) | F_k] ≥ α̃ h(x_k) − c̃`
    General { alpha: f64, c: f64 },
}

impl SafetyMode {
    /// `(α̃, c̃)` of the general condition this mode specializes.
    pub fn general_form(&self) -> (f64, f64) {
        match *self {
            SafetyMode::Dtcbf { alpha } => (alpha, 0.0),
            SafetyMode::CMart { c } => (1.0, c),
            SafetyMode::General { alpha, c } => (alpha, c),
        }
    }
}

/// Parameters shared by every bound: the expectation condition, horizon
/// `K`, initial barrier value `h(x₀)`, drop bound `δ`, standard-deviation
/// bound `σ`, and the optional upper bound `B` on `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetySpec {
    pub mode: SafetyMode,
    pub horizon: u32,
    pub h0: f64,
    pub delta: f64,
    pub sigma: f64,
    pub upper_bound: Option<f64>,
}

impl SafetySpec {
    pub fn new(
        mode: SafetyMode,
        horizon: u32,
        h0: f64,
        delta: f64,
        sigma: f64,
        upper_bound: Option<f64>,
    ) -> Result<Self> {
        let spec = Self {
            mode,
            horizon,
            h0,
            delta,
            sigma,
            upper_bound,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dtcbf(alpha: f64, horizon: u32, h0: f64, delta: f64, sigma: f64) -> Result<Self> {
        Self::new(SafetyMode::Dtcbf { alpha }, horizon, h0, delta, sigma, None)
    }

    pub fn cmart(c: f64, horizon: u32, h0: f64, delta: f64, sigma: f64) -> Result<Self> {
        Self::new(SafetyMode::CMart { c }, horizon, h0, delta, sigma, None)
    }

    pub fn with_upper_bound(mut self, b: f64) -> Result<Self> {
        self.upper_bound = Some(b);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.horizon < 1 {
            return bad("horizon K must be >= 1".into());
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return bad(format!("delta must be finite and > 0, got {}", self.delta));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma must be finite and > 0, got {}", self.sigma));
        }
        if !self.h0.is_finite() {
            return bad(format!("h0 must be finite, got {}", self.h0));
        }
        let alpha_ok = |a: f64| a > 0.0 && a <= 1.0;
        match self.mode {
            SafetyMode::Dtcbf { alpha } if !alpha_ok(alpha) => {
                return bad(format!("alpha must lie in (0, 1], got {alpha}"));
            }
            SafetyMode::CMart { c } if !(c >= 0.0) || !c.is_finite() => {
                return bad(format!("c must be finite and >= 0, got {c}"));
            }
            SafetyMode::General { alpha, c } => {
                if !alpha_ok(alpha) {
                    return bad(format!("alpha must lie in (0, 1], got {alpha}"));
                }
                if !(c >= 0.0) || !c.is_finite() {
                    return bad(format!("c must be finite and >= 0, got {c}"));
                }
            }
            _ => {}
        }
        if let Some(b) = self.upper_bound {
            if !(b > 0.0) || !b.is_finite() {
                return bad(format!("upper bound B must be finite and > 0, got {b}"));
            }
        }
        Ok(())
    }
}

/// A probability bound before and after clamping to `[0, 1]`.
///
/// Bounds at or above one carry no information but are kept rather than
/// hidden; `vacuous` records that case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub raw: f64,
    pub clamped: f64,
    pub vacuous: bool,
}

impl BoundResult {
    pub fn from_raw(raw: f64) -> Self {
        Self {
            raw,
            clamped: raw.clamp(0.0, 1.0),
            vacuous: raw >= 1.0,
        }
    }
}

/// Threshold `λ·δ` in barrier units (not yet divided by `δ`):
/// `α̃^K h(x₀) − c̃ Σ_{i=1}^{K} α̃^{K−i}`.
///
/// May be negative, in which case no Freedman guarantee exists.
pub fn lambda_threshold(spec: &SafetySpec) -> f64 {
    let k = spec.horizon;
    match spec.mode {
        SafetyMode::Dtcbf { alpha } => alpha.powi(k as i32) * spec.h0,
        SafetyMode::CMart { c } => spec.h0 - c * f64::from(k),
        SafetyMode::General { alpha, c } => {
            alpha.powi(k as i32) * spec.h0 - c * geometric_sum(alpha, k)
        }
    }
}

/// `Σ_{i=0}^{n−1} r^i`, exact at `r = 1` and `r = 0`.
pub fn geometric_sum(r: f64, n: u32) -> f64 {
    if n == 0 {
        0.0
    } else if r == 1.0 {
        f64::from(n)
    } else if r == 0.0 {
        1.0
    } else {
        -(f64::from(n) * r.ln()).exp_m1() / (1.0 - r)
    }
}

/// `P_u(K, x₀) ≤ 1 − λ/B`.
pub fn ville_bound(spec: &SafetySpec) -> Result<BoundResult> {
    spec.validate()?;
    let b = spec.upper_bound.ok_or(Error::MissingUpperBound)?;
    Ok(BoundResult::from_raw(1.0 - lambda_threshold(spec) / b))
}

/// `P_u(K, x₀) ≤ H(λ/δ, σ√K/δ)`; vacuous with `raw = 1` when `λ < 0`.
pub fn freedman_bound(spec: &SafetySpec) -> Result<BoundResult> {
    spec.validate()?;
    let lambda = lambda_threshold(spec);
    if lambda < 0.0 {
        return Ok(BoundResult::from_raw(1.0));
    }
    let xi = spec.sigma * f64::from(spec.horizon).sqrt() / spec.delta;
    Ok(BoundResult::from_raw(freedman_kernel(
        lambda / spec.delta,
        xi,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_threshold_cases() {
        let s = SafetySpec::dtcbf(1.0, 50, 3.0, 1.0, 0.1).unwrap();
        assert_eq!(lambda_threshold(&s), 3.0);
        let s = SafetySpec::cmart(0.0, 50, 3.0, 1.0, 0.1).unwrap();
        assert_eq!(lambda_threshold(&s), 3.0);
        for &(c, k, h0) in &[(0.1, 10u32, 5.0), (0.37, 77, 2.0), (0.0, 1, -1.0)] {
            let general =
                SafetySpec::new(SafetyMode::General { alpha: 1.0, c }, k, h0, 1.0, 1.0, None)
                    .unwrap();
            let cm = SafetySpec::cmart(c, k, h0, 1.0, 1.0).unwrap();
            assert!((lambda_threshold(&general) - lambda_threshold(&cm)).abs() < 1e-12);
        }
    }

    #[test]
    fn general_with_zero_c_matches_dtcbf() {
        let g = SafetySpec::new(SafetyMode::General { alpha: 0.9, c: 0.0 }, 12, 4.0, 1.0, 1.0, None)
            .unwrap();
        let d = SafetySpec::dtcbf(0.9, 12, 4.0, 1.0, 1.0).unwrap();
        assert_eq!(lambda_threshold(&g), lambda_threshold(&d));
    }

    #[test]
    fn ville_examples() {
        let s = SafetySpec::dtcbf(1.0, 100, 5.0, 1.0, 0.2)
            .unwrap()
            .with_upper_bound(10.0)
            .unwrap();
        assert_eq!(ville_bound(&s).unwrap().raw, 0.5);

        let s = SafetySpec::cmart(0.1, 100, 5.0, 1.0, 0.2)
            .unwrap()
            .with_upper_bound(10.0)
            .unwrap();
        let r = ville_bound(&s).unwrap();
        assert!((r.raw - 1.5).abs() < 1e-12);
        assert!(r.vacuous);
        assert_eq!(r.clamped, 1.0);

        let s = SafetySpec::dtcbf(0.99, 100, 5.0, 1.0, 0.2)
            .unwrap()
            .with_upper_bound(10.0)
            .unwrap();
        let r = ville_bound(&s).unwrap();
        assert!((r.raw - 0.816_983_829_363_385_2).abs() < 1e-13);
    }

    #[test]
    fn ville_requires_upper_bound() {
        let s = SafetySpec::dtcbf(0.9, 10, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(ville_bound(&s), Err(Error::MissingUpperBound)));
    }

    #[test]
    fn freedman_examples() {
        for &(delta, sigma, k) in &[(1.0, 0.2, 100u32), (0.3, 5.0, 1), (7.0, 0.01, 9)] {
            let s = SafetySpec::dtcbf(1.0, k, 0.0, delta, sigma).unwrap();
            assert_eq!(freedman_bound(&s).unwrap().raw, 1.0);
        }
        let s = SafetySpec::dtcbf(0.99, 100, 5.0, 1.0, 0.2).unwrap();
        let r = freedman_bound(&s).unwrap();
        assert!((r.raw - 0.693_257_408_809_810_4).abs() < 1e-13);
        assert!(!r.vacuous);

        let s = SafetySpec::cmart(0.01, 100, 5.0, 1.0, 0.2).unwrap();
        let r = freedman_bound(&s).unwrap();
        assert!((r.raw - freedman_kernel(4.0, 2.0).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn negative_lambda_is_vacuous() {
        let s = SafetySpec::cmart(0.1, 100, 5.0, 1.0, 0.2).unwrap();
        let r = freedman_bound(&s).unwrap();
        assert_eq!(r.raw, 1.0);
        assert!(r.vacuous);
    }

    #[test]
    fn spec_validation() {
        assert!(SafetySpec::dtcbf(0.0, 1, 1.0, 1.0, 1.0).is_err());
        assert!(SafetySpec::dtcbf(1.1, 1, 1.0, 1.0, 1.0).is_err());
        assert!(SafetySpec::dtcbf(0.5, 0, 1.0, 1.0, 1.0).is_err());
        assert!(SafetySpec::dtcbf(0.5, 1, 1.0, 0.0, 1.0).is_err());
        assert!(SafetySpec::dtcbf(0.5, 1, 1.0, 1.0, -1.0).is_err());
        assert!(SafetySpec::cmart(-0.1, 1, 1.0, 1.0, 1.0).is_err());
        assert!(SafetySpec::dtcbf(0.5, 1, 1.0, 1.0, 1.0)
            .unwrap()
            .with_upper_bound(0.0)
            .is_err());
    }

    #[test]
    fn vacuity_flag_tracks_raw() {
        for &raw in &[-0.5, 0.0, 0.3, 0.999_999, 1.0, 1.5] {
            let r = BoundResult::from_raw(raw);
            assert!((0.0..=1.0).contains(&r.clamped));
            assert_eq!(r.vacuous, raw >= 1.0);
        }
    }

    #[test]
    fn geometric_sum_edges() {
        assert_eq!(geometric_sum(0.5, 0), 0.0);
        assert_eq!(geometric_sum(0.0, 3), 1.0);
        assert_eq!(geometric_sum(1.0, 7), 7.0);
        assert!((geometric_sum(0.5, 3) - 1.75).abs() < 1e-15);
    }
}
