use serde::{Deserialize, Serialize};

use super::table::{col, Cell, Column, ColumnType, ResultTable};
use super::Linspace;
use crate::bounds::{comparison_conditions, dominance_gap, freedman_kernel};
use crate::error::{Error, Result};

pub const BOUND_GRID_COLUMNS: &[Column] = &[
    col("lambda", ColumnType::Float),
    col("sigma", ColumnType::Float),
    col("ville", ColumnType::Float),
    col("freedman", ColumnType::Float),
    col("cond1", ColumnType::Bool),
    col("cond2", ColumnType::Bool),
    col("gap", ColumnType::Float),
];

/// Ville against Freedman over a `(λ, σ)` grid at fixed `B`, `K`, `δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundGridParams {
    pub upper_bound: f64,
    pub horizon: u32,
    pub delta: f64,
    pub lambda: Linspace,
    pub sigma: Linspace,
}

impl Default for BoundGridParams {
    fn default() -> Self {
        Self {
            upper_bound: 10.0,
            horizon: 100,
            delta: 1.0,
            lambda: Linspace::new(0.0, 10.0, 101),
            sigma: Linspace::new(0.01, 1.0, 100),
        }
    }
}

impl BoundGridParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.upper_bound > 0.0) || !(self.delta > 0.0) || self.horizon < 1 {
            return Err(Error::Config("bound_grid needs B > 0, delta > 0, K >= 1".into()));
        }
        self.lambda.validate("lambda")?;
        self.sigma.validate("sigma")?;
        if self.lambda.start.min(self.lambda.stop) < 0.0 {
            return Err(Error::Config("bound_grid lambda must be >= 0".into()));
        }
        if self.sigma.start.min(self.sigma.stop) <= 0.0 {
            return Err(Error::Config("bound_grid sigma must be > 0".into()));
        }
        Ok(())
    }
}

pub fn bound_grid(id: &str, p: &BoundGridParams) -> Result<ResultTable> {
    p.validate()?;
    let mut table = ResultTable::new(id, BOUND_GRID_COLUMNS);
    let sqrt_k = f64::from(p.horizon).sqrt();
    for lambda in p.lambda.values() {
        for sigma in p.sigma.values() {
            let (c1, c2) = comparison_conditions(lambda, p.delta, sigma, p.horizon, p.upper_bound);
            let freedman = freedman_kernel(lambda / p.delta, sigma * sqrt_k / p.delta)?;
            table.push(vec![
                lambda.into(),
                sigma.into(),
                (1.0 - lambda / p.upper_bound).into(),
                freedman.into(),
                c1.into(),
                c2.into(),
                Cell::Float(dominance_gap(lambda, p.upper_bound, sigma, p.horizon, p.delta)?),
            ])?;
        }
    }
    Ok(table)
}
