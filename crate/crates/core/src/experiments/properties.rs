//! Executable invariants. Each check counts samples and violations and
//! keeps the worst margin (allowed minus observed; negative means violated).

use nalgebra::{Vector2, Vector4, Vector6};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::table::{col, Column, ColumnType, ResultTable};
use crate::bounds::{
    comparison_conditions, dominance_gap_dsigma2, dominance_gap_dsigma2_factors,
    freedman_bound, freedman_exponent, freedman_kernel, issf_worst_case, lambert_w_minus1,
    optimal_gamma, psi, psi_threshold, santoyo_bound, ville_bound, BoundResult, SafetySpec,
};
use crate::dynamics::{Disturbance, HlipConfig, HlipSystem, ScalarLinearSystem, StochasticSystem};
use crate::error::{Error, Result};
use crate::martingale::ville_dtcbf_process;
use crate::montecarlo::{
    cell_seed, mc_cond_moments, trial_rng, wilson_interval, AuditSpec, BernoulliExit, Engine,
    TrialOptions, Z95,
};

pub const PROPERTY_COLUMNS: &[Column] = &[
    col("property", ColumnType::Str),
    col("passed", ColumnType::Bool),
    col("samples", ColumnType::Int),
    col("violations", ColumnType::Int),
    col("worst_margin", ColumnType::Float),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub samples: u64,
    pub violations: u64,
    pub worst_margin: f64,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Running count of checks against their allowances.
#[derive(Debug, Clone)]
pub struct Tally {
    name: &'static str,
    samples: u64,
    violations: u64,
    worst: f64,
}

impl Tally {
    pub fn new(name: &'static str) -> Self {
        Self {
            name,
            samples: 0,
            violations: 0,
            worst: f64::MAX,
        }
    }

    /// Record one check; `margin ≥ 0` passes. NaN fails.
    pub fn check(&mut self, margin: f64) {
        self.samples += 1;
        if margin >= 0.0 {
            self.worst = self.worst.min(margin);
        } else {
            self.violations += 1;
            self.worst = self.worst.min(if margin.is_nan() { f64::MIN } else { margin });
        }
    }

    pub fn check_bool(&mut self, ok: bool) {
        self.check(if ok { 0.0 } else { -1.0 });
    }

    pub fn finish(self) -> PropertyOutcome {
        PropertyOutcome {
            name: self.name,
            samples: self.samples,
            violations: self.violations,
            worst_margin: if self.samples == 0 { 0.0 } else { self.worst },
        }
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

/// Sample sizes of the randomized checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropertySuiteParams {
    pub martingale_trials: u64,
    pub ville_trials: u64,
    pub wilson_repetitions: u64,
    pub moment_draws: usize,
    pub random_tuples: usize,
}

impl Default for PropertySuiteParams {
    fn default() -> Self {
        Self {
            martingale_trials: 10_000,
            ville_trials: 5_000,
            wilson_repetitions: 1_000,
            moment_draws: 1_000_000,
            random_tuples: 10_000,
        }
    }
}

pub fn kernel_identities() -> PropertyOutcome {
    let mut t = Tally::new("kernel_identities");
    for i in 0..=60 {
        let xi = 10f64.powf(-3.0 + 0.1 * f64::from(i));
        t.check_bool(freedman_kernel(0.0, xi).ok() == Some(1.0));
    }
    let e4 = std::f64::consts::E / 4.0;
    t.check(1e-14 - rel_err(freedman_kernel(1.0, 1.0).unwrap_or(f64::NAN), e4));
    t.finish()
}

/// `H` nonincreasing in `λ ∈ [0, 20]`, nondecreasing in `ξ ∈ (0, 10]`, 50×50 grid.
pub fn kernel_monotonicity() -> PropertyOutcome {
    let mut t = Tally::new("kernel_monotonicity");
    let lam = |i: usize| 20.0 * i as f64 / 49.0;
    let xi = |j: usize| 10.0 * (j + 1) as f64 / 50.0;
    let h = |i, j| freedman_kernel(lam(i), xi(j)).unwrap_or(f64::NAN);
    for i in 0..50 {
        for j in 0..50 {
            let here = h(i, j);
            let slack = 1e-14 * here;
            if i + 1 < 50 {
                t.check(here - h(i + 1, j) + slack);
            }
            if j + 1 < 50 {
                t.check(h(i, j + 1) - here + slack);
            }
        }
    }
    t.finish()
}

/// `e^{γx} ≤ 1 + γx + x²(e^γ − 1 − γ)` for `γ ∈ [0, 5]`, `x ∈ [−10, 1]`.
pub fn mgf_lemma(seed: u64, n: usize) -> PropertyOutcome {
    let mut t = Tally::new("mgf_lemma");
    let mut rng = trial_rng(seed, 0);
    for _ in 0..n {
        let gamma: f64 = rng.random_range(0.0..=5.0);
        let x: f64 = rng.random_range(-10.0..=1.0);
        let lhs = (gamma * x).exp();
        let rhs = 1.0 + gamma * x + x * x * (gamma.exp_m1() - gamma);
        t.check(rhs + 1e-12 - lhs);
    }
    t.finish()
}

/// The exponent at the optimal `γ` reproduces `H` and beats 20 perturbed `γ`.
pub fn optimal_gamma_consistency(seed: u64, n: usize) -> PropertyOutcome {
    let mut t = Tally::new("optimal_gamma_consistency");
    let mut rng = trial_rng(seed, 1);
    for _ in 0..n {
        let lambda = rng.random_range(0.0..20.0);
        let xi = rng.random_range(0.05..10.0);
        let g = optimal_gamma(lambda, xi);
        let best = freedman_exponent(g, lambda, xi);
        let h = freedman_kernel(lambda, xi).unwrap_or(f64::NAN);
        t.check(1e-12 - rel_err(best, h));
        for j in 0..20 {
            let dg = (f64::from(j) - 9.5) * 0.05 * (1.0 + g);
            let other = freedman_exponent((g + dg).max(0.0), lambda, xi);
            t.check(other - best + 1e-12 * best);
        }
    }
    t.finish()
}

/// Wherever both comparison conditions hold, `H ≤ 1 − λ/B + 1e−12`.
pub fn prop1_dominance_grid(
    upper_bound: f64,
    horizon: u32,
    delta: f64,
    lambdas: &[f64],
    sigmas: &[f64],
) -> PropertyOutcome {
    let mut t = Tally::new("prop1_dominance_grid");
    let sqrt_k = f64::from(horizon).sqrt();
    for &lambda in lambdas {
        for &sigma in sigmas {
            if comparison_conditions(lambda, delta, sigma, horizon, upper_bound) == (true, true) {
                let h = freedman_kernel(lambda / delta, sigma * sqrt_k / delta).unwrap_or(f64::NAN);
                t.check(1.0 - lambda / upper_bound + 1e-12 - h);
            }
        }
    }
    t.finish()
}

/// Random `(λ, B, σ, K, δ)` drawn inside both comparison conditions.
pub fn prop1_dominance_random(seed: u64, n: usize) -> PropertyOutcome {
    let mut t = Tally::new("prop1_dominance_random");
    let mut rng = trial_rng(seed, 2);
    let phi = crate::bounds::PHI;
    while t.samples < n as u64 {
        let delta = rng.random_range(0.05..2.0);
        let b = delta / phi + rng.random_range(0.0..50.0);
        let horizon = rng.random_range(1..=500u32);
        let lambda = rng.random_range(0.0..=(b - delta / phi));
        let s2_max = lambda * delta / f64::from(horizon);
        if !(s2_max > 0.0) {
            continue;
        }
        let sigma = rng.random_range(0.0..=s2_max).sqrt();
        if sigma <= 0.0 || comparison_conditions(lambda, delta, sigma, horizon, b) != (true, true) {
            continue;
        }
        let gap = crate::bounds::dominance_gap(lambda, b, sigma, horizon, delta).unwrap_or(f64::NAN);
        t.check(gap + 1e-12);
    }
    t.finish()
}

/// Points `(λ, σ, K, δ)` for the derivative checks.
fn derivative_grid() -> Vec<(f64, f64, u32, f64)> {
    let mut pts = Vec::with_capacity(1000);
    for i in 0..10 {
        for j in 0..10 {
            for (m, &(k, d)) in [(1, 0.5), (10, 1.0), (50, 2.0), (100, 1.0), (200, 0.5), (100, 0.25), (400, 1.0), (25, 1.5), (5, 0.75), (1000, 2.0)]
                .iter()
                .enumerate()
            {
                let lambda = 0.5 + 9.5 * f64::from(i) / 9.0 + 0.01 * m as f64;
                let sigma = 0.05 + 0.95 * f64::from(j) / 9.0;
                pts.push((lambda, sigma, k, d));
            }
        }
    }
    pts
}

/// Analytic `∂Δ/∂σ²` against a central difference with step `1e−6 σ²`
/// (relative 1e−5), and its sign.
pub fn derivative_factorization() -> PropertyOutcome {
    let mut t = Tally::new("derivative_factorization");
    for (lambda, sigma, k, delta) in derivative_grid() {
        let analytic = dominance_gap_dsigma2(lambda, 10.0, sigma, k, delta).unwrap_or(f64::NAN);
        let s2 = sigma * sigma;
        let step = 1e-6 * s2;
        // only H depends on σ²; differencing it alone avoids cancelling against 1 − λ/B
        let h = |v: f64| freedman_kernel(lambda / delta, (v * f64::from(k)).sqrt() / delta);
        let fd = match (h(s2 + step), h(s2 - step)) {
            (Ok(hi), Ok(lo)) => -(hi - lo) / (2.0 * step),
            _ => f64::NAN,
        };
        t.check(1e-5 - rel_err(fd, analytic));
        t.check(-analytic);
    }
    t.finish()
}

/// `b ≥ 0` in `∂Δ/∂σ² = a·b` at random points.
pub fn b_factor_nonnegative(seed: u64, n: usize) -> PropertyOutcome {
    let mut t = Tally::new("b_factor_nonnegative");
    let mut rng = trial_rng(seed, 3);
    for _ in 0..n {
        let lambda = rng.random_range(0.0..20.0);
        let sigma = rng.random_range(0.01..3.0);
        let k = rng.random_range(1..=1000u32);
        let delta = rng.random_range(0.05..3.0);
        match dominance_gap_dsigma2_factors(lambda, sigma, k, delta) {
            Ok((a, b)) => {
                t.check(b);
                t.check(-a);
            }
            Err(_) => t.check_bool(false),
        }
    }
    t.finish()
}

/// The literature bound reduces to the Ville bound at `c = 0` and at `α = 1`.
pub fn santoyo_ville_coincidence(seed: u64, n: usize) -> PropertyOutcome {
    let mut t = Tally::new("santoyo_ville_coincidence");
    let mut rng = trial_rng(seed, 4);
    for _ in 0..n {
        let alpha = rng.random_range(0.5..=1.0);
        let c = rng.random_range(0.0..0.2);
        let k = rng.random_range(1..=200u32);
        let b = rng.random_range(1.0..20.0);
        let h0 = rng.random_range(0.0..=b);
        let pairs = [
            (
                santoyo_bound(alpha, 0.0, k, h0, b),
                SafetySpec::dtcbf(alpha, k, h0, 1.0, 1.0).and_then(|s| s.with_upper_bound(b)),
            ),
            (
                santoyo_bound(1.0, c, k, h0, b),
                SafetySpec::cmart(c, k, h0, 1.0, 1.0).and_then(|s| s.with_upper_bound(b)),
            ),
        ];
        for (s, spec) in pairs {
            match spec.and_then(|spec| ville_bound(&spec)) {
                Ok(v) => t.check(1e-14 * v.raw.abs().max(1e-300) - (s.raw - v.raw).abs()),
                Err(_) => t.check_bool(false),
            }
        }
    }
    t.finish()
}

/// `clamped ∈ [0, 1]` and `vacuous ⟺ raw ≥ 1`, including negative `λ`.
pub fn vacuity_flags(seed: u64, n: usize) -> PropertyOutcome {
    let mut t = Tally::new("vacuity_flags");
    let mut rng = trial_rng(seed, 5);
    let ok = |r: &BoundResult| {
        (0.0..=1.0).contains(&r.clamped)
            && r.vacuous == (r.raw >= 1.0)
            && r.clamped == r.raw.clamp(0.0, 1.0)
    };
    for _ in 0..n {
        t.check_bool(ok(&BoundResult::from_raw(rng.random_range(-3.0..3.0))));
        let c = rng.random_range(0.0..0.5);
        let spec = SafetySpec::cmart(c, rng.random_range(1..=100), rng.random_range(0.0..10.0), 1.0, 0.3);
        match spec.and_then(|s| freedman_bound(&s)) {
            Ok(r) => t.check_bool(ok(&r)),
            Err(_) => t.check_bool(false),
        }
    }
    t.finish()
}

/// `W₋₁(−1/e) = −1`, round trips `w e^w = x`, and `Ψ_φ ≥ 0` above the threshold.
pub fn lambert_checks(seed: u64) -> PropertyOutcome {
    let mut t = Tally::new("lambert_w");
    let x0 = -(-1.0f64).exp();
    t.check(1e-9 - (lambert_w_minus1(x0).unwrap_or(f64::NAN) + 1.0).abs());
    for i in 0..100 {
        let x = x0 * (1.0 - f64::from(i) / 100.0).max(1e-12);
        let w = lambert_w_minus1(x).unwrap_or(f64::NAN);
        t.check(1e-10 - (w * w.exp() - x).abs());
        t.check(-1.0 - w);
    }
    let phi = -0.5;
    match psi_threshold(phi) {
        Ok(b0) => {
            t.check(1e-9 - psi(phi, b0).abs());
            let mut rng = trial_rng(seed, 6);
            for _ in 0..100 {
                let b = b0 + rng.random_range(0.0..50.0);
                t.check(psi(phi, b) + 1e-15);
            }
        }
        Err(_) => t.check_bool(false),
    }
    t.finish()
}

/// Sample moments of every disturbance family against the closed forms, 5σ bands.
pub fn disturbance_moments(seed: u64, draws: usize) -> PropertyOutcome {
    let mut t = Tally::new("disturbance_moments");
    let families = [
        Disturbance::unit_uniform(),
        Disturbance::UniformInterval { lo: -0.5, hi: 2.0 },
        Disturbance::unit_truncated_gaussian(1.0),
        Disturbance::TruncatedGaussian {
            mean: 0.3,
            std: 0.5,
            lo: -1.0,
            hi: 0.5,
        },
        Disturbance::skewed_two_point(),
        Disturbance::UniformDisk2 { radius: 0.3 },
        Disturbance::ProductOfDisks {
            radii: vec![0.06, 0.02],
        },
        Disturbance::UniformBall { dim: 4, radius: 0.1 },
    ];
    for (fi, dist) in families.iter().enumerate() {
        let dim = dist.dim();
        let (mean, cov) = dist.exact_moments();
        let mut rng = trial_rng(seed, 100 + fi as u64);
        let mut s1 = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        let mut samples = Vec::with_capacity(draws * dim);
        for _ in 0..draws {
            dist.sample_into(&mut rng, &mut buf);
            for (a, v) in s1.iter_mut().zip(&buf) {
                *a += v;
            }
            samples.extend_from_slice(&buf);
        }
        let n = draws as f64;
        for i in 0..dim {
            let m = s1[i] / n;
            let (mut c2, mut c4) = (0.0, 0.0);
            for row in samples.chunks_exact(dim) {
                let d = row[i] - m;
                c2 += d * d;
                c4 += d * d * d * d;
            }
            let var = c2 / (n - 1.0);
            let se_m = (var / n).sqrt();
            let se_v = ((c4 / n - (c2 / n).powi(2)).max(0.0) / n).sqrt();
            t.check(5.0 * se_m - (m - mean[i]).abs());
            t.check(5.0 * se_v - (var - cov[(i, i)]).abs());
        }
    }
    t.finish()
}

/// Martingale checks on full-horizon scalar trajectories. Returns, in order:
/// predictable nonincrease, difference bound, PQV bound, reconstruction,
/// zero drift of `M_K`, and containment (one sample per exiting path).
pub fn scalar_martingale_suite(
    engine: &Engine,
    seed: u64,
    trials: u64,
    alpha: f64,
    disturbance: Disturbance,
    sigma: f64,
    horizon: u32,
    h0: f64,
) -> Result<Vec<PropertyOutcome>> {
    let sys = ScalarLinearSystem::new(alpha, disturbance)?;
    let delta = 1.0;
    let mut opts = TrialOptions::new(horizon).with_audit(AuditSpec {
        alpha_tilde: alpha,
        c_tilde: 0.0,
        delta,
    });
    opts.stop_on_exit = false;
    let outcomes = engine.run_trials(&sys, &h0, &opts, trials, cell_seed(seed, &[7]))?;
    let mut inc = Tally::new("predictable_nonincrease");
    let mut diff = Tally::new("martingale_difference_bound");
    let mut pqv = Tally::new("pqv_bound");
    let mut recon = Tally::new("doob_reconstruction");
    let mut drift = Tally::new("martingale_zero_drift");
    let mut cont = Tally::new("containment");
    let pqv_cap = sigma * sigma * f64::from(horizon) / (delta * delta);
    let mut finals = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        let a = o.audit.ok_or_else(|| Error::Config("audit missing".into()))?;
        inc.check(1e-12 - a.max_predictable_increment);
        diff.check(1.0 - a.max_martingale_difference);
        pqv.check(pqv_cap + 1e-12 - a.pqv);
        recon.check(1e-12 - a.reconstruction_error);
        if a.containment.exited {
            cont.check_bool(a.containment.holds());
        }
        finals.push(a.final_martingale);
    }
    let n = finals.len() as f64;
    let mean = finals.iter().sum::<f64>() / n;
    let var = finals.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0);
    drift.check(5.0 * (var / n).sqrt() - mean.abs());
    Ok(vec![
        inc.finish(),
        diff.finish(),
        pqv.finish(),
        recon.finish(),
        drift.finish(),
        cont.finish(),
    ])
}

/// Almost-sure floor `h(x_k) ≥ α^k h₀ − δΣα^i` on scalar trajectories with `|d| ≤ δ`.
pub fn issf_floor(engine: &Engine, seed: u64, trials: u64) -> Result<PropertyOutcome> {
    let (alpha, h0, horizon) = (0.99, 10.0, 400);
    let sys = ScalarLinearSystem::new(alpha, Disturbance::unit_uniform())?;
    let mut opts = TrialOptions::new(horizon);
    opts.stop_on_exit = false;
    let outcomes = engine.run_trials(&sys, &h0, &opts, trials, cell_seed(seed, &[8]))?;
    let mut t = Tally::new("issf_floor");
    for o in &outcomes {
        for (k, h) in o.barrier.iter().enumerate() {
            t.check(h - issf_worst_case(alpha, 1.0, h0, k as u32) + 1e-12);
        }
    }
    Ok(t.finish())
}

/// Ville's inequality on `W_k = Bα^{−K} − α^{−k}h(x_k)`: the empirical
/// `P{sup W > Bα^{−K}}` stays under `E[W₀]/λ` plus three CI half-widths.
/// The noise `U[−(1−α)B, (1−α)B]` keeps `h ≤ B`, so `W ≥ 0`.
pub fn ville_empirical(engine: &Engine, seed: u64, trials: u64) -> Result<PropertyOutcome> {
    let (alpha, b, horizon, h0) = (0.99, 10.0, 100u32, 1.0);
    let r = (1.0 - alpha) * b;
    let sys = ScalarLinearSystem::new(alpha, Disturbance::UniformInterval { lo: -r, hi: r })?;
    let mut opts = TrialOptions::new(horizon);
    opts.stop_on_exit = false;
    let outcomes = engine.run_trials(&sys, &h0, &opts, trials, cell_seed(seed, &[9]))?;
    let lambda = b * alpha.powi(-(horizon as i32));
    let mut t = Tally::new("ville_empirical");
    let mut hits = 0u64;
    for o in &outcomes {
        let w = ville_dtcbf_process(&o.barrier, alpha, b);
        // nonnegativity is the premise of the inequality
        t.check(w.iter().copied().fold(f64::INFINITY, f64::min) + 1e-12);
        if w.iter().any(|&v| v > lambda) {
            hits += 1;
        }
    }
    let n = outcomes.len() as u64;
    let p = hits as f64 / n as f64;
    let (lo, hi) = wilson_interval(hits, n, Z95);
    let bound = (lambda - h0) / lambda;
    t.check(bound + 3.0 * 0.5 * (hi - lo) - p);
    Ok(t.finish())
}

/// Wilson 95% coverage for Bernoulli(p), `p ∈ {0.1, 0.5}`, `n = 500`: at least 93%.
pub fn wilson_coverage(engine: &Engine, seed: u64, repetitions: u64) -> Result<PropertyOutcome> {
    let mut t = Tally::new("wilson_coverage");
    for (pi, &p) in [0.1, 0.5].iter().enumerate() {
        let sys = BernoulliExit { p };
        let mut covered = 0u64;
        for rep in 0..repetitions {
            let est = engine.estimate_exit_probability(
                &sys,
                &1.0,
                &TrialOptions::new(1),
                500,
                cell_seed(seed, &[10, pi as u64, rep]),
            )?;
            covered += u64::from(est.ci_lo <= p && p <= est.ci_hi);
        }
        t.check(covered as f64 / repetitions as f64 - 0.93);
    }
    Ok(t.finish())
}

fn random_hlip_state<R: Rng>(sys: &HlipSystem, rng: &mut R) -> Vector6<f64> {
    let center = sys.config().obstacle.center;
    let r = sys.config().obstacle.radius;
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let dist = r + rng.random_range(0.01..1.5);
    let p = Vector2::new(center[0] + dist * angle.cos(), center[1] + dist * angle.sin());
    Vector6::new(
        p[0],
        p[1],
        rng.random_range(-0.2..0.2),
        rng.random_range(-0.2..0.2),
        rng.random_range(-0.8..0.8),
        rng.random_range(-0.8..0.8),
    )
}

/// Safety filter at random states: constraint met after filtering,
/// idempotence, and `h̄ ≤ h` at sampled successors.
pub fn hlip_filter(seed: u64, states: usize) -> Result<Vec<PropertyOutcome>> {
    let sys = HlipSystem::new(HlipConfig::new(0.06, 0.9))?;
    let mut rng = trial_rng(seed, 11);
    let mut cons = Tally::new("filter_constraint");
    let mut idem = Tally::new("filter_idempotence");
    let mut conv = Tally::new("convexification_conservative");
    let alpha = sys.alpha();
    for _ in 0..states {
        let x = random_hlip_state(&sys, &mut rng);
        let eval = sys.barrier_eval(&x)?;
        let u_nom = sys.nominal_controller(&x);
        let f = sys.safety_filter(&x, &u_nom)?;
        let (mean, _) = sys.cond_moments_hbar(&x, &f.u)?;
        cons.check(mean - alpha * eval.h + 1e-9);
        let again = sys.safety_filter(&x, &f.u)?;
        idem.check_bool(again.u == f.u);
        let mut d = [0.0; 4];
        sys.disturbance().sample_into(&mut rng, &mut d);
        let next = sys.step(&x, &f.u, &Vector4::from(d));
        conv.check(sys.barrier(&next) - sys.hbar(&eval, &next) + 1e-12);
    }
    Ok(vec![cons.finish(), idem.finish(), conv.finish()])
}

/// Exact one-step moments of `h` for HLIP against sampling at 10 states, 5σ bands.
pub fn hlip_moments(seed: u64, samples: usize) -> Result<PropertyOutcome> {
    let sys = HlipSystem::new(HlipConfig::new(0.06, 0.9))?;
    let mut rng = trial_rng(seed, 12);
    let mut t = Tally::new("hlip_exact_moments");
    for i in 0..10 {
        let x = random_hlip_state(&sys, &mut rng);
        let tr = sys.transition(&x, &mut rng)?;
        let est = mc_cond_moments(&sys, &x, samples, cell_seed(seed, &[13, i]))?;
        t.check(5.0 * est.se_mean - (est.mean - tr.cond_mean_h).abs());
        t.check(5.0 * est.se_variance - (est.variance - tr.cond_var_h).abs());
    }
    Ok(t.finish())
}

pub fn property_suite(
    p: &PropertySuiteParams,
    seed: u64,
    engine: &Engine,
) -> Result<Vec<PropertyOutcome>> {
    let n = p.random_tuples;
    let lambdas: Vec<f64> = (0..=100).map(|i| f64::from(i) / 10.0).collect();
    let sigmas: Vec<f64> = (1..=100).map(|j| f64::from(j) / 100.0).collect();
    let mut out = vec![
        kernel_identities(),
        kernel_monotonicity(),
        mgf_lemma(seed, n),
        optimal_gamma_consistency(seed, (n / 10).max(1)),
        prop1_dominance_grid(10.0, 100, 1.0, &lambdas, &sigmas),
        prop1_dominance_random(seed, n),
        derivative_factorization(),
        b_factor_nonnegative(seed, (n / 10).max(1)),
        santoyo_ville_coincidence(seed, (n / 10).max(1)),
        vacuity_flags(seed, (n / 10).max(1)),
        lambert_checks(seed),
        disturbance_moments(seed, p.moment_draws),
    ];
    out.extend(scalar_martingale_suite(
        engine,
        seed,
        p.martingale_trials,
        0.99,
        Disturbance::unit_truncated_gaussian(1.0 / 3.0),
        1.0 / 3.0,
        100,
        1.0,
    )?);
    out.push(issf_floor(engine, seed, (p.martingale_trials / 10).max(1))?);
    out.push(ville_empirical(engine, seed, p.ville_trials)?);
    out.push(wilson_coverage(engine, seed, p.wilson_repetitions)?);
    out.extend(hlip_filter(seed, 1000)?);
    out.push(hlip_moments(seed, 20_000)?);
    Ok(out)
}

pub fn property_table(id: &str, outcomes: &[PropertyOutcome]) -> Result<ResultTable> {
    let mut table = ResultTable::new(id, PROPERTY_COLUMNS);
    for o in outcomes {
        table.push(vec![
            o.name.into(),
            o.passed().into(),
            o.samples.into(),
            o.violations.into(),
            o.worst_margin.into(),
        ])?;
    }
    Ok(table)
}
