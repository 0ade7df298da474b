use serde::{Deserialize, Serialize};

use super::table::{col, opt, Cell, Column, ColumnType, ResultTable};
use super::AuditSummary;
use crate::bounds::{
    constructive_delta_sigma, freedman_bound, hlip_delta_sigma, issf_worst_case, SafetySpec,
};
use crate::dynamics::{
    Disturbance, ExplicitMatrices, Gait, HlipConfig, HlipSystem, Obstacle, StochasticSystem,
};
use crate::error::{Error, Result};
use crate::montecarlo::{cell_seed, coord, AuditSpec, Engine, ExitEstimate, TrialOptions};

pub const HLIP_COLUMNS: &[Column] = &[
    col("d_max", ColumnType::Float),
    col("alpha", ColumnType::Float),
    opt("horizon", ColumnType::Int),
    opt("delta", ColumnType::Float),
    opt("sigma2", ColumnType::Float),
    opt("h0", ColumnType::Float),
    opt("thm3_bound", ColumnType::Float),
    opt("thm3_raw", ColumnType::Float),
    opt("thm3_vacuous", ColumnType::Bool),
    opt("p_hat", ColumnType::Float),
    opt("ci_lo", ColumnType::Float),
    opt("ci_hi", ColumnType::Float),
    opt("n_trials", ColumnType::Int),
    opt("n_exits", ColumnType::Int),
    opt("n_controller_failures", ColumnType::Int),
    opt("worst_case_first_violation", ColumnType::Int),
    opt("max_constraint_violation", ColumnType::Float),
    opt("max_hbar_excess", ColumnType::Float),
    opt("containment_failures", ColumnType::Int),
    col("status", ColumnType::Str),
];

pub const TRAJECTORY_COLUMNS: &[Column] = &[
    col("d_max", ColumnType::Float),
    col("alpha", ColumnType::Float),
    col("trial", ColumnType::Int),
    col("step", ColumnType::Int),
    col("px", ColumnType::Float),
    col("py", ColumnType::Float),
    col("h", ColumnType::Float),
];

pub const HLIP_DEFAULT_TRIALS: u64 = 5000;

/// Filtered HLIP walk past an obstacle over a `(d_max, α)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HlipCaseParams {
    pub d_max: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Seconds; the horizon is `duration · step_rate` steps.
    pub duration: f64,
    pub retain_trajectories: usize,
    /// Sample `d` uniformly from the 4-ball of radius `d_max` instead of two
    /// independent disks. The bound then uses the Lipschitz recipe.
    pub ball_disturbance: bool,
    pub gait: Gait,
    pub matrices: Option<ExplicitMatrices>,
    pub obstacle: Obstacle,
    pub v_des: [f64; 2],
    pub gain: f64,
    pub u_max: f64,
    pub x0: Option<[f64; 6]>,
}

impl Default for HlipCaseParams {
    fn default() -> Self {
        let base = HlipConfig::new(0.0, 1.0);
        Self {
            d_max: vec![0.0, 0.03, 0.06],
            alpha: vec![0.9, 0.99],
            duration: 10.0,
            retain_trajectories: 50,
            ball_disturbance: false,
            gait: base.gait,
            matrices: None,
            obstacle: base.obstacle,
            v_des: base.v_des,
            gain: base.gain,
            u_max: base.u_max,
            x0: None,
        }
    }
}

impl HlipCaseParams {
    pub fn config(&self, d_max: f64, alpha: f64) -> HlipConfig {
        HlipConfig {
            gait: self.gait,
            matrices: self.matrices.clone(),
            obstacle: self.obstacle,
            d_max,
            disturbance: self.ball_disturbance.then_some(Disturbance::UniformBall {
                dim: 4,
                radius: d_max,
            }),
            alpha,
            v_des: self.v_des,
            gain: self.gain,
            u_max: self.u_max,
            x0: self.x0,
        }
    }

    pub fn horizon(&self) -> Result<u32> {
        let k = (self.duration * self.gait.step_rate).round();
        if !(k >= 1.0 && k <= f64::from(u32::MAX)) {
            return Err(Error::Config(format!(
                "duration {} s at {} steps/s gives no steps",
                self.duration, self.gait.step_rate
            )));
        }
        Ok(k as u32)
    }

    /// `(δ, σ²)` matching the disturbance geometry.
    pub fn delta_sigma2(&self, d_max: f64) -> Result<(f64, f64)> {
        if self.ball_disturbance {
            constructive_delta_sigma(1.0, d_max)
        } else {
            hlip_delta_sigma(d_max)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_max.is_empty() || self.alpha.is_empty() {
            return Err(Error::Config("hlip_case needs nonempty d_max and alpha lists".into()));
        }
        self.horizon()?;
        for &d in &self.d_max {
            for &a in &self.alpha {
                let sys = HlipSystem::new(self.config(d, a))?;
                sys.initial_state()?;
            }
        }
        Ok(())
    }
}

/// First `k ≤ K` at which the almost-sure floor drops below zero.
pub fn worst_case_first_violation(alpha: f64, delta: f64, h0: f64, horizon: u32) -> Option<u32> {
    (1..=horizon).find(|&k| issf_worst_case(alpha, delta, h0, k) < 0.0)
}

struct CellResult {
    horizon: u32,
    delta: f64,
    sigma2: f64,
    h0: f64,
    bound: crate::bounds::BoundResult,
    estimate: ExitEstimate,
    first_violation: Option<u32>,
    max_violation: f64,
    max_hbar_excess: f64,
    audit: AuditSummary,
    paths: Vec<(u64, Vec<[f64; 3]>)>,
}

fn run_cell(
    p: &HlipCaseParams,
    d_max: f64,
    alpha: f64,
    trials: u64,
    seed: u64,
    engine: &Engine,
) -> Result<CellResult> {
    let sys = HlipSystem::new(p.config(d_max, alpha))?;
    let x0 = sys.initial_state()?;
    let h0 = sys.barrier(&x0);
    let horizon = p.horizon()?;
    let (delta, sigma2) = p.delta_sigma2(d_max)?;
    let bound = if delta > 0.0 {
        freedman_bound(&SafetySpec::dtcbf(alpha, horizon, h0, delta, sigma2.sqrt())?)?
    } else {
        // no disturbance: the filtered walk is deterministic and h never drops below α h
        crate::bounds::BoundResult::from_raw(if h0 >= 0.0 { 0.0 } else { 1.0 })
    };

    let mut opts = TrialOptions::new(horizon).retaining(p.retain_trajectories);
    if delta > 0.0 {
        opts = opts.with_audit(AuditSpec {
            alpha_tilde: alpha,
            c_tilde: 0.0,
            delta,
        });
    }
    let cell = cell_seed(seed, &[coord(d_max), coord(alpha)]);
    let outcomes = engine.run_trials(&sys, &x0, &opts, trials, cell)?;

    let mut audit = AuditSummary::default();
    audit.absorb(&outcomes);
    let max_violation = outcomes
        .iter()
        .filter_map(|o| o.min_constraint_slack)
        .fold(0.0f64, |m, s| m.max(-s));
    let max_hbar_excess = outcomes
        .iter()
        .filter_map(|o| o.max_hbar_excess)
        .fold(f64::NEG_INFINITY, f64::max);
    let paths = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| {
            o.trajectory.as_ref().map(|tr| {
                let pts = tr
                    .iter()
                    .zip(&o.barrier)
                    .map(|(x, h)| [x[0], x[1], *h])
                    .collect();
                (i as u64, pts)
            })
        })
        .collect();

    Ok(CellResult {
        horizon,
        delta,
        sigma2,
        h0,
        bound,
        estimate: ExitEstimate::from_outcomes(&outcomes, false),
        first_violation: if delta > 0.0 {
            worst_case_first_violation(alpha, delta, h0, horizon)
        } else {
            None
        },
        max_violation,
        max_hbar_excess: if max_hbar_excess.is_finite() { max_hbar_excess } else { 0.0 },
        audit,
        paths,
    })
}

/// The summary table, the retained trajectories, and the audit totals.
pub fn hlip_case(
    id: &str,
    p: &HlipCaseParams,
    trials: u64,
    seed: u64,
    engine: &Engine,
) -> Result<(ResultTable, ResultTable, AuditSummary)> {
    p.validate()?;
    if trials == 0 {
        return Err(Error::Config("hlip_case needs trials >= 1".into()));
    }
    let points: Vec<(f64, f64)> = p
        .d_max
        .iter()
        .flat_map(|&d| p.alpha.iter().map(move |&a| (d, a)))
        .collect();
    let results = engine.sweep(&points, |&(d, a)| run_cell(p, d, a, trials, seed, engine));

    let mut table = ResultTable::new(id, HLIP_COLUMNS);
    let mut paths = ResultTable::new(format!("{id}_trajectories"), TRAJECTORY_COLUMNS);
    let mut total = AuditSummary::default();
    for (&(d, a), res) in points.iter().zip(results) {
        let mut row: Vec<Cell> = vec![d.into(), a.into()];
        match res {
            Ok(c) => {
                let e = &c.estimate;
                row.extend([
                    c.horizon.into(),
                    c.delta.into(),
                    c.sigma2.into(),
                    c.h0.into(),
                    c.bound.clamped.into(),
                    c.bound.raw.into(),
                    c.bound.vacuous.into(),
                    e.p_hat.into(),
                    e.ci_lo.into(),
                    e.ci_hi.into(),
                    e.n_trials.into(),
                    e.n_exits.into(),
                    e.n_controller_failures.into(),
                    c.first_violation.into(),
                    c.max_violation.into(),
                    c.max_hbar_excess.into(),
                    c.audit.containment_failures.into(),
                    "ok".into(),
                ]);
                total.merge(&c.audit);
                for (trial, pts) in &c.paths {
                    for (step, [px, py, h]) in pts.iter().enumerate() {
                        paths.push(vec![
                            d.into(),
                            a.into(),
                            (*trial).into(),
                            (step as u64).into(),
                            (*px).into(),
                            (*py).into(),
                            (*h).into(),
                        ])?;
                    }
                }
            }
            Err(msg) => {
                row.extend(std::iter::repeat_n(Cell::Null, HLIP_COLUMNS.len() - 3));
                row.push(msg.into());
            }
        }
        table.push(row)?;
    }
    Ok((table, paths, total))
}
