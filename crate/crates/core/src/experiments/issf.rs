use serde::{Deserialize, Serialize};

use super::table::{col, opt, Cell, Column, ColumnType, ResultTable};
use super::{AuditSummary, Linspace};
use crate::bounds::{issf_worst_case, stochastic_issf_bound};
use crate::dynamics::{Disturbance, ScalarLinearSystem};
use crate::error::{Error, Result};
use crate::montecarlo::{cell_seed, coord, AuditSpec, Engine, ExitEstimate, TrialOptions};

pub const ISSF_COLUMNS: &[Column] = &[
    col("horizon", ColumnType::Int),
    col("epsilon", ColumnType::Float),
    col("distribution", ColumnType::Str),
    col("cor1_bound", ColumnType::Float),
    col("cor1_raw", ColumnType::Float),
    col("cor1_vacuous", ColumnType::Bool),
    col("issf_indicator", ColumnType::Int),
    opt("p_hat", ColumnType::Float),
    opt("ci_lo", ColumnType::Float),
    opt("ci_hi", ColumnType::Float),
    opt("n_trials", ColumnType::Int),
    opt("n_exits", ColumnType::Int),
    opt("containment_failures", ColumnType::Int),
    col("status", ColumnType::Str),
];

/// Scalar model `x_{k+1} = αx_k + d_k`, `h(x) = x`, started at `h0`, over a
/// grid of horizons and exit margins `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IssfCompareParams {
    pub alpha: f64,
    pub delta: f64,
    pub sigma: f64,
    pub h0: f64,
    pub horizons: Vec<u32>,
    pub epsilon: Linspace,
    pub distributions: Vec<Disturbance>,
}

impl Default for IssfCompareParams {
    fn default() -> Self {
        Self {
            alpha: 0.99,
            delta: 1.0,
            sigma: 1.0 / 3.0,
            h0: 10.0,
            horizons: vec![1, 100, 200, 300, 400],
            epsilon: Linspace::new(0.0, 95.0, 20),
            distributions: vec![
                Disturbance::unit_uniform(),
                Disturbance::unit_truncated_gaussian(1.0),
                Disturbance::skewed_two_point(),
            ],
        }
    }
}

pub const ISSF_DEFAULT_TRIALS: u64 = 2000;

impl IssfCompareParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("issf alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.delta > 0.0) || !(self.sigma > 0.0) || !self.h0.is_finite() {
            return Err(Error::Config("issf needs delta > 0, sigma > 0, finite h0".into()));
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::Config("issf horizons must be a nonempty list of K >= 1".into()));
        }
        if self.distributions.is_empty() {
            return Err(Error::Config("issf needs at least one distribution".into()));
        }
        self.epsilon.validate("epsilon")?;
        if self.epsilon.start.min(self.epsilon.stop) < 0.0 {
            return Err(Error::Config("epsilon must be >= 0".into()));
        }
        for d in &self.distributions {
            ScalarLinearSystem::new(self.alpha, d.clone())?;
        }
        Ok(())
    }

    /// `1` when `−ε` is at or below the almost-sure floor at `K` (exit possible).
    pub fn issf_indicator(&self, horizon: u32, epsilon: f64) -> i64 {
        i64::from(-epsilon >= issf_worst_case(self.alpha, self.delta, self.h0, horizon))
    }
}

pub fn issf_compare(
    id: &str,
    p: &IssfCompareParams,
    trials: u64,
    seed: u64,
    engine: &Engine,
) -> Result<(ResultTable, AuditSummary)> {
    p.validate()?;
    if trials == 0 {
        return Err(Error::Config("issf_compare needs trials >= 1".into()));
    }
    let mut points = Vec::new();
    for &k in &p.horizons {
        for eps in p.epsilon.values() {
            for di in 0..p.distributions.len() {
                points.push((k, eps, di));
            }
        }
    }
    let audit = AuditSpec {
        alpha_tilde: p.alpha,
        c_tilde: 0.0,
        delta: p.delta,
    };
    let results = engine.sweep(&points, |&(k, eps, di)| {
        let sys = ScalarLinearSystem::new(p.alpha, p.distributions[di].clone())?;
        let opts = TrialOptions::new(k).with_epsilon(eps).with_audit(audit);
        let seed = cell_seed(seed, &[u64::from(k), coord(eps), di as u64]);
        let outcomes = engine.run_trials(&sys, &p.h0, &opts, trials, seed)?;
        let mut summary = AuditSummary::default();
        summary.absorb(&outcomes);
        Ok((ExitEstimate::from_outcomes(&outcomes, false), summary))
    });

    let mut table = ResultTable::new(id, ISSF_COLUMNS);
    let mut total = AuditSummary::default();
    for (&(k, eps, di), res) in points.iter().zip(results) {
        let bound = stochastic_issf_bound(p.alpha, k, p.h0, p.delta, p.sigma, eps)?;
        let mut row: Vec<Cell> = vec![
            k.into(),
            eps.into(),
            p.distributions[di].family().into(),
            bound.clamped.into(),
            bound.raw.into(),
            bound.vacuous.into(),
            p.issf_indicator(k, eps).into(),
        ];
        match res {
            Ok((est, summary)) => {
                row.extend([
                    est.p_hat.into(),
                    est.ci_lo.into(),
                    est.ci_hi.into(),
                    est.n_trials.into(),
                    est.n_exits.into(),
                    summary.containment_failures.into(),
                    "ok".into(),
                ]);
                total.merge(&summary);
            }
            Err(msg) => {
                row.extend(std::iter::repeat_n(Cell::Null, 6));
                row.push(msg.into());
            }
        }
        table.push(row)?;
    }
    Ok((table, total))
}
