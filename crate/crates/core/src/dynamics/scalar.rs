use rand::Rng;

use super::{Disturbance, StochasticSystem, Transition};
use crate::error::{Error, Result};

/// `x_{k+1} = α x_k + d_k` with barrier `h(x) = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarLinearSystem {
    pub alpha: f64,
    pub disturbance: Disturbance,
    moments: (f64, f64),
}

impl ScalarLinearSystem {
    pub fn new(alpha: f64, disturbance: Disturbance) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidSpec(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        disturbance.validate()?;
        if disturbance.dim() != 1 {
            return Err(Error::InvalidDistribution(format!(
                "scalar system needs a scalar disturbance, got dimension {}",
                disturbance.dim()
            )));
        }
        let (m, c) = disturbance.exact_moments();
        Ok(Self {
            alpha,
            disturbance,
            moments: (m[0], c[(0, 0)]),
        })
    }

    pub fn step(&self, x: f64, d: f64) -> f64 {
        self.alpha * x + d
    }

    /// Exact `(E[d], Var(d))`.
    pub fn disturbance_moments(&self) -> (f64, f64) {
        self.moments
    }
}

impl StochasticSystem for ScalarLinearSystem {
    type State = f64;

    fn barrier(&self, x: &f64) -> f64 {
        *x
    }

    fn transition<R: Rng + ?Sized>(&self, x: &f64, rng: &mut R) -> Result<Transition<f64>> {
        let mut d = [0.0];
        self.disturbance.sample_into(rng, &mut d);
        let (mean, var) = self.moments;
        Ok(Transition {
            next: self.step(*x, d[0]),
            cond_mean_h: self.alpha * x + mean,
            cond_var_h: var,
            input: None,
            constraint_slack: None,
            hbar_next: None,
        })
    }
}
