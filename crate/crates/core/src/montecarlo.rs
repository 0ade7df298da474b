//! Reproducible trial execution and exit-probability estimation.
//!
//! Every trial draws from its own ChaCha8 stream: the cell seed comes from
//! the base seed and the grid coordinates, the stream index is the trial
//! number. Results therefore do not depend on scheduling, worker count or
//! the order in which grid points are visited.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::geometric_sum;
use crate::dynamics::StochasticSystem;
use crate::error::{Error, Result};
use crate::martingale::{
    build_stopped_candidate, check_difference_bound, containment_witness, doob_decompose,
    ContainmentRecord,
};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one grid cell, from the base seed and the cell's coordinates.
pub fn cell_seed(base_seed: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(base_seed), |acc, c| splitmix64(acc ^ splitmix64(*c)))
}

/// Grid coordinate for a float parameter: its bit pattern.
pub fn coord(x: f64) -> u64 {
    x.to_bits()
}

pub fn trial_rng(cell_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
    rng.set_stream(trial);
    rng
}

/// Martingale audit parameters: the expectation condition `(α̃, c̃)` and the
/// drop bound `δ` used to normalize the barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditSpec {
    pub alpha_tilde: f64,
    pub c_tilde: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOptions {
    pub horizon: u32,
    /// Exit means `h < −ε`.
    pub epsilon: f64,
    /// Keep the state path of trials with index below this.
    pub retain_trajectories: usize,
    /// Stop at the first exit rather than simulating all `K` steps.
    pub stop_on_exit: bool,
    pub audit: Option<AuditSpec>,
}

impl TrialOptions {
    pub fn new(horizon: u32) -> Self {
        Self {
            horizon,
            epsilon: 0.0,
            retain_trajectories: 0,
            stop_on_exit: true,
            audit: None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_audit(mut self, audit: AuditSpec) -> Self {
        self.audit = Some(audit);
        self
    }

    pub fn retaining(mut self, n: usize) -> Self {
        self.retain_trajectories = n;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::InvalidSpec("horizon K must be >= 1".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidSpec(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if let Some(a) = &self.audit {
            if !(a.delta > 0.0) {
                return Err(Error::InvalidSpec(format!("audit delta must be > 0, got {}", a.delta)));
            }
        }
        Ok(())
    }
}

/// Martingale checks on one trial, on the normalized scale `η = (h + ε)/δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    /// Largest `A_k − A_{k−1}`; `≤ 0` for a supermartingale.
    pub max_predictable_increment: f64,
    pub max_martingale_difference: f64,
    /// Steps with `M_k − M_{k−1} > 1`.
    pub difference_violations: usize,
    /// `⟨M⟩` at the last simulated step.
    pub pqv: f64,
    /// `M` at the last simulated step.
    pub final_martingale: f64,
    pub reconstruction_error: f64,
    pub containment: ContainmentRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome<S> {
    /// First `k ≤ K` with `h(x_k) < −ε`.
    pub exit_index: Option<u32>,
    /// The controller could not produce an input; the trial ended there.
    pub controller_failed: bool,
    /// Number of steps simulated.
    pub steps: u32,
    pub trajectory: Option<Vec<S>>,
    pub barrier: Vec<f64>,
    /// Smallest filter constraint slack over the trial, for filtered systems.
    pub min_constraint_slack: Option<f64>,
    /// Largest `h̄(x_{k+1}) − h(x_{k+1})`; `≤ 0` when the convexification is conservative.
    pub max_hbar_excess: Option<f64>,
    pub audit: Option<AuditRecord>,
}

impl<S> TrialOutcome<S> {
    pub fn exited(&self) -> bool {
        self.exit_index.is_some()
    }
}

fn fold_min(acc: Option<f64>, v: Option<f64>) -> Option<f64> {
    match (acc, v) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

fn fold_max(acc: Option<f64>, v: Option<f64>) -> Option<f64> {
    match (acc, v) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    }
}

/// Simulate one closed-loop trial from `x0`.
pub fn run_trial<Sys: StochasticSystem, R: Rng + ?Sized>(
    system: &Sys,
    x0: &Sys::State,
    opts: &TrialOptions,
    retain: bool,
    rng: &mut R,
) -> Result<TrialOutcome<Sys::State>> {
    opts.validate()?;
    let k_max = opts.horizon as usize;
    let mut x = x0.clone();
    let mut barrier = Vec::with_capacity(k_max + 1);
    let mut cond_means = Vec::with_capacity(k_max);
    let mut cond_vars = Vec::with_capacity(k_max);
    let mut trajectory = retain.then(|| vec![x.clone()]);
    let mut exit_index = None;
    let mut controller_failed = false;
    let mut min_slack = None;
    let mut max_excess = None;

    barrier.push(system.barrier(&x));
    if barrier[0] < -opts.epsilon {
        exit_index = Some(0);
    }
    let mut steps = 0;
    while steps < opts.horizon && !(opts.stop_on_exit && exit_index.is_some()) {
        let t = match system.transition(&x, rng) {
            Ok(t) => t,
            Err(_) => {
                controller_failed = exit_index.is_none();
                break;
            }
        };
        steps += 1;
        x = t.next;
        let h = system.barrier(&x);
        barrier.push(h);
        cond_means.push(t.cond_mean_h);
        cond_vars.push(t.cond_var_h);
        min_slack = fold_min(min_slack, t.constraint_slack);
        max_excess = fold_max(max_excess, t.hbar_next.map(|hb| hb - h));
        if let Some(tr) = trajectory.as_mut() {
            tr.push(x.clone());
        }
        if exit_index.is_none() && h < -opts.epsilon {
            exit_index = Some(steps);
        }
    }

    let audit = match &opts.audit {
        Some(spec) => Some(audit_trial(spec, opts, &barrier, &cond_means, &cond_vars)?),
        None => None,
    };

    Ok(TrialOutcome {
        exit_index,
        controller_failed,
        steps,
        trajectory,
        barrier,
        min_constraint_slack: min_slack,
        max_hbar_excess: max_excess,
        audit,
    })
}

/// `λ` on the normalized scale: `(α̃^K (h₀ + ε) − c̃ Σ_{i=1}^K α̃^{K−i}) / δ`.
pub fn normalized_lambda(spec: &AuditSpec, horizon: u32, h0: f64, epsilon: f64) -> f64 {
    let a = spec.alpha_tilde;
    (a.powi(horizon as i32) * (h0 + epsilon) - spec.c_tilde * geometric_sum(a, horizon))
        / spec.delta
}

fn audit_trial(
    spec: &AuditSpec,
    opts: &TrialOptions,
    barrier: &[f64],
    cond_means: &[f64],
    cond_vars: &[f64],
) -> Result<AuditRecord> {
    let shift = opts.epsilon;
    let d = spec.delta;
    let eta: Vec<f64> = barrier.iter().map(|h| (h + shift) / d).collect();
    let eta_means: Vec<f64> = cond_means.iter().map(|m| (m + shift) / d).collect();
    let eta_vars: Vec<f64> = cond_vars.iter().map(|v| v / (d * d)).collect();
    let trace = build_stopped_candidate(
        &eta,
        &eta_means,
        &eta_vars,
        spec.alpha_tilde,
        spec.c_tilde,
        d,
        opts.horizon as usize,
    )?;
    let parts = doob_decompose(&trace);
    let lambda = normalized_lambda(spec, opts.horizon, barrier[0], shift);
    // exit on the normalized scale is η < 0, i.e. h < −ε
    let containment = containment_witness(&eta, &parts, lambda)?;
    let pqv = parts.pqv()?.last();
    Ok(AuditRecord {
        max_predictable_increment: if eta.len() > 1 {
            parts.max_predictable_increment()
        } else {
            0.0
        },
        max_martingale_difference: if eta.len() > 1 {
            parts.max_martingale_difference()
        } else {
            0.0
        },
        difference_violations: check_difference_bound(&parts, 0.0)
            .iter()
            .filter(|ok| !**ok)
            .count(),
        pqv,
        final_martingale: *parts.martingale.last().expect("nonempty"),
        reconstruction_error: parts.reconstruction_error(&trace),
        containment,
    })
}

/// Exit frequency with a two-sided 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitEstimate {
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_trials: u64,
    pub n_exits: u64,
    pub n_controller_failures: u64,
}

impl ExitEstimate {
    /// With `failures_as_exits`, controller failures count toward the
    /// numerator as well as being reported separately.
    pub fn from_counts(
        n_trials: u64,
        n_exits: u64,
        n_controller_failures: u64,
        failures_as_exits: bool,
    ) -> Self {
        let hits = if failures_as_exits {
            n_exits + n_controller_failures
        } else {
            n_exits
        };
        let (ci_lo, ci_hi) = wilson_interval(hits, n_trials, Z95);
        let p_hat = if n_trials == 0 {
            0.0
        } else {
            hits as f64 / n_trials as f64
        };
        Self {
            p_hat,
            ci_lo: ci_lo.min(p_hat),
            ci_hi: ci_hi.max(p_hat),
            n_trials,
            n_exits,
            n_controller_failures,
        }
    }

    pub fn from_outcomes<S>(outcomes: &[TrialOutcome<S>], failures_as_exits: bool) -> Self {
        let exits = outcomes.iter().filter(|o| o.exited()).count() as u64;
        let failures = outcomes.iter().filter(|o| o.controller_failed).count() as u64;
        Self::from_counts(outcomes.len() as u64, exits, failures, failures_as_exits)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_hi - self.ci_lo)
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Sample moments of `h(x_{k+1})` after one closed-loop step from `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    /// Standard error of the sample variance from the fourth central moment.
    pub se_variance: f64,
    pub n_samples: usize,
}

pub fn mc_cond_moments<Sys: StochasticSystem>(
    system: &Sys,
    x: &Sys::State,
    n_samples: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    if n_samples < 2 {
        return Err(Error::InvalidSpec("need at least 2 samples".into()));
    }
    let mut rng = trial_rng(seed, 0);
    let mut values = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let t = system.transition(x, &mut rng)?;
        values.push(system.barrier(&t.next));
    }
    let n = n_samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let variance = m2 * n / (n - 1.0);
    Ok(MomentEstimate {
        mean,
        variance,
        se_mean: (variance / n).sqrt(),
        se_variance: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
        n_samples,
    })
}

/// Parallel executor with a fixed worker count.
pub struct Engine {
    pool: rayon::ThreadPool,
}

impl Engine {
    /// `workers = None` uses every available core.
    pub fn new(workers: Option<usize>) -> Result<Self> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = workers {
            builder = builder.num_threads(n.max(1));
        }
        let pool = builder
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// `n_trials` independent trials; outcome `i` uses stream `i` of `cell_seed`.
    pub fn run_trials<Sys: StochasticSystem>(
        &self,
        system: &Sys,
        x0: &Sys::State,
        opts: &TrialOptions,
        n_trials: u64,
        cell_seed: u64,
    ) -> Result<Vec<TrialOutcome<Sys::State>>> {
        opts.validate()?;
        self.pool.install(|| {
            (0..n_trials)
                .into_par_iter()
                .map(|i| {
                    let mut rng = trial_rng(cell_seed, i);
                    let retain = (i as usize) < opts.retain_trajectories;
                    run_trial(system, x0, opts, retain, &mut rng)
                })
                .collect()
        })
    }

    pub fn estimate_exit_probability<Sys: StochasticSystem>(
        &self,
        system: &Sys,
        x0: &Sys::State,
        opts: &TrialOptions,
        n_trials: u64,
        cell_seed: u64,
    ) -> Result<ExitEstimate> {
        if n_trials == 0 {
            return Err(Error::InvalidSpec("need at least one trial".into()));
        }
        let outcomes = self.run_trials(system, x0, opts, n_trials, cell_seed)?;
        Ok(ExitEstimate::from_outcomes(&outcomes, false))
    }

    /// Evaluate `f` at every grid point. Rows come back in grid order; a
    /// failing point yields an error row instead of aborting the sweep.
    pub fn sweep<P, T, F>(&self, points: &[P], f: F) -> Vec<std::result::Result<T, String>>
    where
        P: Sync,
        T: Send,
        F: Fn(&P) -> Result<T> + Sync,
    {
        self.pool.install(|| {
            points
                .par_iter()
                .map(|p| f(p).map_err(|e| e.to_string()))
                .collect()
        })
    }
}

/// Toy system that leaves the safe set at each step with probability `p`;
/// used to check the estimator.
#[derive(Debug, Clone, Copy)]
pub struct BernoulliExit {
    pub p: f64,
}

impl StochasticSystem for BernoulliExit {
    type State = f64;

    fn barrier(&self, x: &f64) -> f64 {
        *x
    }

    fn transition<R: Rng + ?Sized>(
        &self,
        _x: &f64,
        rng: &mut R,
    ) -> Result<crate::dynamics::Transition<f64>> {
        let next = if rng.random::<f64>() < self.p { -1.0 } else { 1.0 };
        Ok(crate::dynamics::Transition {
            next,
            cond_mean_h: 1.0 - 2.0 * self.p,
            cond_var_h: 4.0 * self.p * (1.0 - self.p),
            input: None,
            constraint_slack: None,
            hbar_next: None,
        })
    }
}
