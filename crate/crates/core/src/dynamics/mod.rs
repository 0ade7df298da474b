//! Closed-loop stochastic systems, their disturbance laws and barrier
//! functions.
//!
//! A system owns its controller, so one [`StochasticSystem::transition`]
//! call is one closed-loop step. Each transition also reports the exact
//! conditional mean and variance of the barrier at the next state, which is
//! what the martingale audit consumes.

mod disturbance;
mod hlip;
pub mod quadrature;
mod scalar;

pub use disturbance::{truncated_moments, Disturbance};
pub use hlip::{
    c_matrix, d_matrix, hlip_matrices, BarrierEval, ExplicitMatrices, FilterResult, Gait, HlipConfig,
    HlipState, HlipSystem, Obstacle, GRAVITY,
};
pub use scalar::ScalarLinearSystem;

use rand::Rng;

use crate::error::Result;

/// Result of one closed-loop step from `x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S> {
    pub next: S,
    /// `E[h(x_{k+1}) | F_k]`.
    pub cond_mean_h: f64,
    /// `Var(h(x_{k+1}) | F_k)`.
    pub cond_var_h: f64,
    /// Applied input, for systems with one.
    pub input: Option<[f64; 2]>,
    /// `E[h̄(x_{k+1}) | F_k] − α h(x_k)` for filtered systems; nonnegative
    /// when the filter constraint holds.
    pub constraint_slack: Option<f64>,
    /// Convexified barrier `h̄` at the sampled next state.
    pub hbar_next: Option<f64>,
}

pub trait StochasticSystem: Sync {
    type State: Clone + Send + Sync + std::fmt::Debug;

    /// `h(x)`; the safe set is `h ≥ 0`.
    fn barrier(&self, x: &Self::State) -> f64;

    /// One closed-loop step. Errors mean the controller could not produce
    /// an input; they end the trial as a controller failure.
    fn transition<R: Rng + ?Sized>(
        &self,
        x: &Self::State,
        rng: &mut R,
    ) -> Result<Transition<Self::State>>;
}
