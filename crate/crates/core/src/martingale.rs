//! Candidate supermartingales built from barrier trajectories, their Doob
//! decomposition and predictable quadratic variation (PQV), plus the
//! per-step checks that audit each step of the Freedman safety argument on
//! concrete data.
//!
//! Conditional moments are supplied analytically by the model, so every
//! check here is exact up to floating-point rounding rather than a
//! statistical statement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the normalized (`η = h/δ`) scale for the
/// supermartingale and containment checks.
pub const CHECK_TOL: f64 = 1e-9;

/// A process `W_0..=W_K` together with its one-step conditional moments.
///
/// `cond_means[k-1] = E[W_k | F_{k-1}]`,
/// `cond_variances[k-1] = Var(W_k | F_{k-1})` and
/// `cond_second_moments[k-1] = E[(W_k − W_{k−1})² | F_{k-1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessTrace {
    values: Vec<f64>,
    cond_means: Vec<f64>,
    cond_variances: Vec<f64>,
    cond_second_moments: Vec<f64>,
}

impl ProcessTrace {
    /// Trace from values, conditional means and conditional variances of
    /// each `W_k`. The increment second moments follow as
    /// `Var + (E[W_k|F] − W_{k−1})²`.
    pub fn new(values: Vec<f64>, cond_means: Vec<f64>, cond_variances: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::LengthMismatch("trace needs at least W_0".into()));
        }
        let n = values.len() - 1;
        if cond_means.len() != n || cond_variances.len() != n {
            return Err(Error::LengthMismatch(format!(
                "{} values need {n} conditional means and variances, got {} and {}",
                values.len(),
                cond_means.len(),
                cond_variances.len()
            )));
        }
        let cond_second_moments = cond_variances
            .iter()
            .zip(&cond_means)
            .zip(&values)
            .map(|((v, m), prev)| v + (m - prev).powi(2))
            .collect();
        Ok(Self {
            values,
            cond_means,
            cond_variances,
            cond_second_moments,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cond_means(&self) -> &[f64] {
        &self.cond_means
    }

    pub fn cond_variances(&self) -> &[f64] {
        &self.cond_variances
    }

    pub fn cond_second_moments(&self) -> &[f64] {
        &self.cond_second_moments
    }

    /// Number of steps `K`.
    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    /// `⟨W⟩_k` from the increment second moments.
    pub fn pqv(&self) -> Result<PqvTrace> {
        pqv(&self.cond_second_moments)
    }
}

/// `W = M + A` with `M` a martingale and `A` predictable, `A_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoobParts {
    pub martingale: Vec<f64>,
    pub predictable: Vec<f64>,
    /// `E[(M_k − M_{k−1})² | F_{k−1}] = Var(W_k | F_{k−1})`.
    pub martingale_second_moments: Vec<f64>,
}

impl DoobParts {
    /// `⟨M⟩_k`.
    pub fn pqv(&self) -> Result<PqvTrace> {
        pqv(&self.martingale_second_moments)
    }

    /// Largest predictable increment `A_k − A_{k−1}`; `≤ 0` for a supermartingale.
    pub fn max_predictable_increment(&self) -> f64 {
        self.predictable
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest martingale difference `M_k − M_{k−1}`.
    pub fn max_martingale_difference(&self) -> f64 {
        self.martingale
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_k |M_k + A_k − W_k|`.
    pub fn reconstruction_error(&self, trace: &ProcessTrace) -> f64 {
        self.martingale
            .iter()
            .zip(&self.predictable)
            .zip(trace.values())
            .map(|((m, a), w)| (m + a - w).abs())
            .fold(0.0, f64::max)
    }
}

/// Cumulative `⟨·⟩_k`, `k = 0..=K`, starting at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqvTrace {
    pub cumulative: Vec<f64>,
}

impl PqvTrace {
    pub fn last(&self) -> f64 {
        *self.cumulative.last().expect("pqv trace always holds <.>_0")
    }
}

/// Candidate supermartingale
///
/// ```text
/// W_k = −α̃^{K−k} η_k + α̃^K η_0 − Σ_{i=1}^{k} α̃^{K−i} c̃/δ
/// ```
///
/// for a normalized barrier `η = h/δ` sampled at `k = 0..=K` (`K` is the
/// trace length minus one). `eta_cond_means[k-1]` and `eta_cond_variances[k-1]`
/// are `E[η_k | F_{k−1}]` and `Var(η_k | F_{k−1})`; the conditional moments
/// of `W` follow from the same affine map.
pub fn build_candidate(
    eta_values: &[f64],
    eta_cond_means: &[f64],
    eta_cond_variances: &[f64],
    alpha_tilde: f64,
    c_tilde: f64,
    delta: f64,
) -> Result<ProcessTrace> {
    let horizon = eta_values.len().saturating_sub(1);
    build_stopped_candidate(
        eta_values,
        eta_cond_means,
        eta_cond_variances,
        alpha_tilde,
        c_tilde,
        delta,
        horizon,
    )
}

/// [`build_candidate`] for a path observed only up to a stopping step
/// `n ≤ K`: the weights still use the full horizon `K`.
pub fn build_stopped_candidate(
    eta_values: &[f64],
    eta_cond_means: &[f64],
    eta_cond_variances: &[f64],
    alpha_tilde: f64,
    c_tilde: f64,
    delta: f64,
    horizon: usize,
) -> Result<ProcessTrace> {
    if eta_values.is_empty() {
        return Err(Error::LengthMismatch("need at least eta_0".into()));
    }
    let steps = eta_values.len() - 1;
    if eta_cond_means.len() != steps || eta_cond_variances.len() != steps {
        return Err(Error::LengthMismatch(format!(
            "{} barrier values need {steps} conditional means and variances, got {} and {}",
            eta_values.len(),
            eta_cond_means.len(),
            eta_cond_variances.len()
        )));
    }
    if steps > horizon {
        return Err(Error::LengthMismatch(format!(
            "{steps} steps exceed the horizon {horizon}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidSpec(format!("delta must be > 0, got {delta}")));
    }
    if !(alpha_tilde > 0.0 && alpha_tilde <= 1.0) || !(c_tilde >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "need alpha in (0, 1] and c >= 0, got {alpha_tilde}, {c_tilde}"
        )));
    }

    // weights[k] = α̃^{K−k}
    let weights: Vec<f64> = (0..=steps)
        .map(|k| alpha_tilde.powi((horizon - k) as i32))
        .collect();
    let anchor = weights[0] * eta_values[0];
    let drift = c_tilde / delta;

    let mut values = Vec::with_capacity(steps + 1);
    let mut means = Vec::with_capacity(steps);
    let mut vars = Vec::with_capacity(steps);
    let mut drift_sum = 0.0;
    values.push(0.0);
    for k in 1..=steps {
        drift_sum += weights[k] * drift;
        values.push(-weights[k] * eta_values[k] + anchor - drift_sum);
        means.push(-weights[k] * eta_cond_means[k - 1] + anchor - drift_sum);
        vars.push(weights[k] * weights[k] * eta_cond_variances[k - 1]);
    }
    ProcessTrace::new(values, means, vars)
}

/// `M_k = W_k + Σ_{i=1}^{k} (W_{i−1} − E[W_i | F_{i−1}])`, `A = W − M`.
pub fn doob_decompose(trace: &ProcessTrace) -> DoobParts {
    let w = trace.values();
    let mut predictable = Vec::with_capacity(w.len());
    let mut martingale = Vec::with_capacity(w.len());
    let mut a = 0.0;
    predictable.push(0.0);
    martingale.push(w[0]);
    for (k, mean) in trace.cond_means().iter().enumerate() {
        a += mean - w[k];
        predictable.push(a);
        martingale.push(w[k + 1] - a);
    }
    DoobParts {
        martingale,
        predictable,
        martingale_second_moments: trace.cond_variances().to_vec(),
    }
}

/// Cumulative sum of conditional increment second moments.
pub fn pqv(second_moments: &[f64]) -> Result<PqvTrace> {
    let mut cumulative = Vec::with_capacity(second_moments.len() + 1);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for (i, &m) in second_moments.iter().enumerate() {
        if m < 0.0 || m.is_nan() {
            return Err(Error::NegativeSecondMoment {
                step: i + 1,
                value: m,
            });
        }
        acc += m;
        cumulative.push(acc);
    }
    Ok(PqvTrace { cumulative })
}

/// `E[W_k | F_{k−1}] ≤ W_{k−1} + tol` for each `k = 1..=K`.
pub fn check_supermartingale(trace: &ProcessTrace, tol: f64) -> Vec<bool> {
    trace
        .cond_means()
        .iter()
        .zip(trace.values())
        .map(|(mean, prev)| *mean <= prev + tol)
        .collect()
}

/// `M_k − M_{k−1} ≤ 1 + tol` for each `k = 1..=K`.
pub fn check_difference_bound(parts: &DoobParts, tol: f64) -> Vec<bool> {
    parts
        .martingale
        .windows(2)
        .map(|w| w[1] - w[0] <= 1.0 + tol)
        .collect()
}

/// Outcome of the event containment `{min h < 0} ⊆ {max M ≥ λ}` on one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContainmentRecord {
    /// Some `h_k < 0` (touching zero is still safe).
    pub exited: bool,
    /// `max_k M_k ≥ λ − tol`.
    pub mart_exceeded: bool,
    /// `max_k M_k − λ`.
    pub margin: f64,
}

impl ContainmentRecord {
    /// The implication `exited ⇒ mart_exceeded`.
    pub fn holds(&self) -> bool {
        !self.exited || self.mart_exceeded
    }
}

/// Evaluate the containment on one path. `lambda` is normalized
/// (`λ = (α̃^K h₀ − c̃Σα̃^{K−i})/δ`).
pub fn containment_witness(
    h_values: &[f64],
    parts: &DoobParts,
    lambda: f64,
) -> Result<ContainmentRecord> {
    if h_values.len() != parts.martingale.len() {
        return Err(Error::LengthMismatch(format!(
            "{} barrier values against {} martingale values",
            h_values.len(),
            parts.martingale.len()
        )));
    }
    let exited = h_values.iter().any(|&h| h < 0.0);
    let max_m = parts
        .martingale
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ContainmentRecord {
        exited,
        mart_exceeded: max_m >= lambda - CHECK_TOL,
        margin: max_m - lambda,
    })
}

/// Nonnegative supermartingale `W_k = Bα^{−K} − α^{−k} h(x_k)` used with
/// Ville's inequality when `h ≤ B` and the DTCBF condition holds.
///
/// Exit (`h_k < 0`) is equivalent to `W_k > Bα^{−K}`.
pub fn ville_dtcbf_process(h_values: &[f64], alpha: f64, upper_bound: f64) -> Vec<f64> {
    let horizon = h_values.len().saturating_sub(1) as i32;
    let top = upper_bound * alpha.powi(-horizon);
    h_values
        .iter()
        .enumerate()
        .map(|(k, h)| top - alpha.powi(-(k as i32)) * h)
        .collect()
}

/// Nonnegative supermartingale `W_k = B − h(x_k) + (K − k)c` for the
/// c-martingale condition.
pub fn ville_cmart_process(h_values: &[f64], c: f64, upper_bound: f64) -> Vec<f64> {
    let horizon = h_values.len().saturating_sub(1);
    h_values
        .iter()
        .enumerate()
        .map(|(k, h)| upper_bound - h + (horizon - k) as f64 * c)
        .collect()
}
