//! Hybrid linear inverted pendulum (HLIP) step-to-step model walking past a
//! circular obstacle under an expectation-form DTCBF safety filter.
//!
//! State layout is `x = (p, c, v)`: global COM position, COM position
//! relative to the stance foot, and COM velocity, each planar. The input is
//! the relative foot placement at impact.

use nalgebra::{Matrix2x4, Matrix4, Matrix6, Matrix6x2, Matrix6x4, Vector2, Vector4, Vector6};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::quadrature::{expected_norm, RadialLaw};
use super::{Disturbance, StochasticSystem, Transition};
use crate::error::{Error, Result};

pub const GRAVITY: f64 = 9.81;

pub type HlipState = Vector6<f64>;

/// Relative slack accepted before the filter constraint counts as active.
const FILTER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gait {
    /// COM height (m).
    #[serde(default = "default_z0")]
    pub z0: f64,
    /// Single-support period (s).
    #[serde(default = "default_t_ssp")]
    pub t_ssp: f64,
    /// Double-support period (s).
    #[serde(default)]
    pub t_dsp: f64,
    /// Steps per second.
    #[serde(default = "default_step_rate")]
    pub step_rate: f64,
}

fn default_z0() -> f64 {
    0.8
}

fn default_t_ssp() -> f64 {
    1.0 / 3.0
}

fn default_step_rate() -> f64 {
    3.0
}

impl Default for Gait {
    fn default() -> Self {
        Self {
            z0: default_z0(),
            t_ssp: default_t_ssp(),
            t_dsp: 0.0,
            step_rate: default_step_rate(),
        }
    }
}

impl Gait {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidGait(m));
        if !(self.z0 > 0.0) || !self.z0.is_finite() {
            return bad(format!("z0 must be > 0, got {}", self.z0));
        }
        if !(self.t_ssp > 0.0) || !self.t_ssp.is_finite() {
            return bad(format!("t_ssp must be > 0, got {}", self.t_ssp));
        }
        if !(self.t_dsp >= 0.0) || !self.t_dsp.is_finite() {
            return bad(format!("t_dsp must be >= 0, got {}", self.t_dsp));
        }
        if !(self.step_rate > 0.0) || !self.step_rate.is_finite() {
            return bad(format!("step_rate must be > 0, got {}", self.step_rate));
        }
        let period = self.t_ssp + self.t_dsp;
        if (period * self.step_rate - 1.0).abs() > 1e-3 {
            return bad(format!(
                "t_ssp + t_dsp = {period} s does not match step_rate {} /s",
                self.step_rate
            ));
        }
        Ok(())
    }

    /// `√(g/z0)`.
    pub fn omega(&self) -> f64 {
        (GRAVITY / self.z0).sqrt()
    }
}

/// Step-to-step `(A, B)` of the HLIP map, one copy per planar axis.
///
/// Within a step the COM first drifts at constant velocity through double
/// support, the foot lands at `c − u`, and single support follows the
/// pendulum flow `c̈ = ω² c`.
pub fn hlip_matrices(gait: &Gait) -> Result<(Matrix6<f64>, Matrix6x2<f64>)> {
    gait.validate()?;
    let w = gait.omega();
    let (ch, sh) = ((w * gait.t_ssp).cosh(), (w * gait.t_ssp).sinh());
    let td = gait.t_dsp;
    let mut a = Matrix6::zeros();
    let mut b = Matrix6x2::zeros();
    for i in 0..2 {
        let (p, c, v) = (i, 2 + i, 4 + i);
        a[(p, p)] = 1.0;
        a[(p, c)] = ch - 1.0;
        a[(p, v)] = ch * td + sh / w;
        a[(c, c)] = ch;
        a[(c, v)] = ch * td + sh / w;
        a[(v, c)] = w * sh;
        a[(v, v)] = w * sh * td + ch;
        b[(p, i)] = 1.0 - ch;
        b[(c, i)] = -ch;
        b[(v, i)] = -w * sh;
    }
    Ok((a, b))
}

/// Selects the global position.
pub fn c_matrix() -> Matrix6<f64> {
    let mut c = Matrix6::zeros();
    c[(0, 0)] = 1.0;
    c[(1, 1)] = 1.0;
    c
}

/// `d₁, d₂` enter both position rows, `d₃, d₄` the velocity rows.
pub fn d_matrix() -> Matrix6x4<f64> {
    let mut d = Matrix6x4::zeros();
    d[(0, 0)] = 1.0;
    d[(1, 1)] = 1.0;
    d[(2, 0)] = 1.0;
    d[(3, 1)] = 1.0;
    d[(4, 2)] = 1.0;
    d[(5, 3)] = 1.0;
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Default for Obstacle {
    fn default() -> Self {
        Self {
            center: [2.5, 0.1],
            radius: 0.5,
        }
    }
}

/// Row-major `A` (6×6) and `B` (6×2) supplied verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitMatrices {
    pub a: [[f64; 6]; 6],
    pub b: [[f64; 2]; 6],
}

/// Everything needed to build an [`HlipSystem`]. Unset fields take the
/// defaults of an unobstructed 0.5 m/s walk toward an obstacle just off the
/// path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HlipConfig {
    #[serde(default)]
    pub gait: Gait,
    #[serde(default)]
    pub matrices: Option<ExplicitMatrices>,
    #[serde(default)]
    pub obstacle: Obstacle,
    pub d_max: f64,
    /// Overrides the default independent position and velocity disks of radius `d_max`.
    #[serde(default)]
    pub disturbance: Option<Disturbance>,
    pub alpha: f64,
    #[serde(default = "default_v_des")]
    pub v_des: [f64; 2],
    /// Fraction of the velocity error removed by the nominal controller per step.
    #[serde(default = "default_gain")]
    pub gain: f64,
    /// Cap on `‖u_nom‖` (m).
    #[serde(default = "default_u_max")]
    pub u_max: f64,
    /// Initial state; defaults to the gait's periodic orbit at `v_des`, starting at the origin.
    #[serde(default)]
    pub x0: Option<[f64; 6]>,
}

fn default_v_des() -> [f64; 2] {
    [0.5, 0.0]
}

fn default_gain() -> f64 {
    1.0
}

fn default_u_max() -> f64 {
    1.0
}

impl HlipConfig {
    pub fn new(d_max: f64, alpha: f64) -> Self {
        Self {
            gait: Gait::default(),
            matrices: None,
            obstacle: Obstacle::default(),
            d_max,
            disturbance: None,
            alpha,
            v_des: default_v_des(),
            gain: default_gain(),
            u_max: default_u_max(),
            x0: None,
        }
    }
}

/// `h`, and the outward unit direction `ê` at the current position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierEval {
    pub h: f64,
    pub e_hat: Vector2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterResult {
    pub u: Vector2<f64>,
    /// The nominal input violated the constraint and was projected.
    pub active: bool,
    /// Constraint `aᵀu ≥ b`.
    pub a: Vector2<f64>,
    pub b: f64,
}

#[derive(Debug, Clone)]
pub struct HlipSystem {
    a: Matrix6<f64>,
    b: Matrix6x2<f64>,
    c: Matrix6<f64>,
    d: Matrix6x4<f64>,
    bv_pinv: nalgebra::Matrix2<f64>,
    config: HlipConfig,
    disturbance: Disturbance,
    d_mean: Vector4<f64>,
    pos_cov: nalgebra::Matrix2<f64>,
    radial: RadialLaw,
    pos_radius: f64,
}

impl HlipSystem {
    pub fn new(config: HlipConfig) -> Result<Self> {
        let (a, b) = match &config.matrices {
            Some(m) => {
                let a = Matrix6::from_fn(|i, j| m.a[i][j]);
                let b = Matrix6x2::from_fn(|i, j| m.b[i][j]);
                if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::Config("explicit HLIP matrices must be finite".into()));
                }
                (a, b)
            }
            None => hlip_matrices(&config.gait)?,
        };
        if !(config.d_max >= 0.0) || !config.d_max.is_finite() {
            return Err(Error::Config(format!("d_max must be >= 0, got {}", config.d_max)));
        }
        if !(config.alpha > 0.0 && config.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1], got {}", config.alpha)));
        }
        if !(config.gain >= 0.0) || !(config.u_max > 0.0) {
            return Err(Error::Config(format!(
                "need gain >= 0 and u_max > 0, got {} and {}",
                config.gain, config.u_max
            )));
        }
        let ob = &config.obstacle;
        if !(ob.radius > 0.0) || ob.center.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("obstacle needs radius > 0, got {}", ob.radius)));
        }

        let disturbance = config.disturbance.clone().unwrap_or(Disturbance::ProductOfDisks {
            radii: vec![config.d_max, config.d_max],
        });
        disturbance.validate()?;
        let (radial, pos_radius) = match &disturbance {
            Disturbance::ProductOfDisks { radii } if radii.len() == 2 => (RadialLaw::Disk, radii[0]),
            Disturbance::UniformBall { dim: 4, radius } => (RadialLaw::Ball4Marginal, *radius),
            other => {
                return Err(Error::InvalidDistribution(format!(
                    "HLIP disturbance must be two planar disks or the uniform 4-ball, got {other:?}"
                )))
            }
        };
        let (mean, cov) = disturbance.exact_moments();
        let d_mean = Vector4::from_iterator(mean.iter().copied());
        let cov4 = Matrix4::from_iterator(cov.iter().copied());

        let c = c_matrix();
        let d = d_matrix();
        let cd: Matrix2x4<f64> = (c * d).fixed_rows::<2>(0).into_owned();
        let pos_cov = cd * cov4 * cd.transpose();
        let bv = b.fixed_rows::<2>(4).into_owned();
        let bv_pinv = bv
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::Config(format!("velocity rows of B: {e}")))?;

        Ok(Self {
            a,
            b,
            c,
            d,
            bv_pinv,
            config,
            disturbance,
            d_mean,
            pos_cov,
            radial,
            pos_radius,
        })
    }

    pub fn a(&self) -> &Matrix6<f64> {
        &self.a
    }

    pub fn b(&self) -> &Matrix6x2<f64> {
        &self.b
    }

    pub fn config(&self) -> &HlipConfig {
        &self.config
    }

    pub fn disturbance(&self) -> &Disturbance {
        &self.disturbance
    }

    pub fn alpha(&self) -> f64 {
        self.config.alpha
    }

    fn rho(&self) -> Vector2<f64> {
        Vector2::from(self.config.obstacle.center)
    }

    fn position(&self, x: &HlipState) -> Vector2<f64> {
        (self.c * x).fixed_rows::<2>(0).into_owned()
    }

    /// `‖p − ρ‖ − r` and `ê = (p − ρ)/‖p − ρ‖`.
    pub fn barrier_eval(&self, x: &HlipState) -> Result<BarrierEval> {
        let offset = self.position(x) - self.rho();
        let dist = offset.norm();
        if dist == 0.0 {
            return Err(Error::DegenerateDirection);
        }
        Ok(BarrierEval {
            h: dist - self.config.obstacle.radius,
            e_hat: offset / dist,
        })
    }

    /// `h̄(x_next) = êᵀ(p_next − ρ) − r` for the direction `ê` of the current state.
    pub fn hbar(&self, eval: &BarrierEval, x_next: &HlipState) -> f64 {
        eval.e_hat.dot(&(self.position(x_next) - self.rho())) - self.config.obstacle.radius
    }

    /// Noise-free successor plus the disturbance mean.
    fn mean_next(&self, x: &HlipState, u: &Vector2<f64>) -> HlipState {
        self.a * x + self.b * u + self.d * self.d_mean
    }

    /// `x_{k+1} = Ax + Bu + Dd`.
    pub fn step(&self, x: &HlipState, u: &Vector2<f64>, d: &Vector4<f64>) -> HlipState {
        self.a * x + self.b * u + self.d * d
    }

    /// Deadbeat velocity tracking toward `v + gain·(v_des − v)`, capped at `u_max`.
    pub fn nominal_controller(&self, x: &HlipState) -> Vector2<f64> {
        let v = x.fixed_rows::<2>(4);
        let v_des = Vector2::from(self.config.v_des);
        let target = v + (v_des - v) * self.config.gain;
        let av = (self.a * x).fixed_rows::<2>(4).into_owned();
        let u = self.bv_pinv * (target - av);
        let n = u.norm();
        if n > self.config.u_max {
            u * (self.config.u_max / n)
        } else {
            u
        }
    }

    /// Closest input to `u_nom` with `E[h̄(x_{k+1}) | F_k] ≥ α h(x_k)`.
    pub fn safety_filter(&self, x: &HlipState, u_nom: &Vector2<f64>) -> Result<FilterResult> {
        let eval = self.barrier_eval(x)?;
        let free = self.position(&self.mean_next(x, &Vector2::zeros())) - self.rho();
        let cb = (self.c * self.b).fixed_rows::<2>(0).into_owned();
        let a = cb.transpose() * eval.e_hat;
        let b = self.config.alpha * eval.h - (eval.e_hat.dot(&free) - self.config.obstacle.radius);
        let lhs = a.dot(u_nom);
        if lhs >= b - FILTER_TOL * (1.0 + b.abs()) {
            return Ok(FilterResult {
                u: *u_nom,
                active: false,
                a,
                b,
            });
        }
        let a2 = a.norm_squared();
        if a2 == 0.0 {
            return Err(Error::InfeasibleFilter { violation: b - lhs });
        }
        Ok(FilterResult {
            u: u_nom + a * ((b - lhs) / a2),
            active: true,
            a,
            b,
        })
    }

    /// Exact `(E, Var)` of `h̄(x_{k+1})` given `(x_k, u_k)`.
    pub fn cond_moments_hbar(&self, x: &HlipState, u: &Vector2<f64>) -> Result<(f64, f64)> {
        let eval = self.barrier_eval(x)?;
        let next = self.position(&self.mean_next(x, u)) - self.rho();
        let mean = eval.e_hat.dot(&next) - self.config.obstacle.radius;
        let var = (eval.e_hat.transpose() * self.pos_cov * eval.e_hat)[(0, 0)];
        Ok((mean, var))
    }

    /// Exact `(E, Var)` of the signed distance `h(x_{k+1})` given `(x_k, u_k)`.
    pub fn cond_moments_h(&self, x: &HlipState, u: &Vector2<f64>) -> (f64, f64) {
        let offset = (self.position(&self.mean_next(x, u)) - self.rho()).norm();
        let mean_norm = expected_norm(offset, self.pos_radius, self.radial);
        let second = offset * offset + self.radial.second_moment(self.pos_radius);
        let var = (second - mean_norm * mean_norm).max(0.0);
        (mean_norm - self.config.obstacle.radius, var)
    }

    /// State on the periodic orbit with velocity `v` and global position `p`,
    /// together with the input that keeps it there.
    pub fn periodic_state(&self, p: [f64; 2], v: [f64; 2]) -> Result<(HlipState, Vector2<f64>)> {
        // unknowns (c, u); rows c and v of Ax + Bu must reproduce (c, v)
        let mut m = Matrix4::zeros();
        let mut rhs = Vector4::zeros();
        let x_known = Vector6::new(p[0], p[1], 0.0, 0.0, v[0], v[1]);
        let ax = self.a * x_known;
        for r in 0..4 {
            let row = r + 2;
            for j in 0..2 {
                m[(r, j)] = self.a[(row, 2 + j)] - if r == j { 1.0 } else { 0.0 };
                m[(r, 2 + j)] = self.b[(row, j)];
            }
            let target = if r >= 2 { v[r - 2] } else { 0.0 };
            rhs[r] = target - ax[row];
        }
        let z = m.lu().solve(&rhs).ok_or_else(|| {
            Error::Config("HLIP matrices have no periodic orbit at v_des; supply x0".into())
        })?;
        Ok((
            Vector6::new(p[0], p[1], z[0], z[1], v[0], v[1]),
            Vector2::new(z[2], z[3]),
        ))
    }

    /// `x0` from the config, or the periodic orbit at `v_des` from the origin.
    pub fn initial_state(&self) -> Result<HlipState> {
        match self.config.x0 {
            Some(x) => Ok(Vector6::from(x)),
            None => Ok(self.periodic_state([0.0, 0.0], self.config.v_des)?.0),
        }
    }
}

impl StochasticSystem for HlipSystem {
    type State = HlipState;

    fn barrier(&self, x: &HlipState) -> f64 {
        (self.position(x) - self.rho()).norm() - self.config.obstacle.radius
    }

    fn transition<R: Rng + ?Sized>(
        &self,
        x: &HlipState,
        rng: &mut R,
    ) -> Result<Transition<HlipState>> {
        let eval = self.barrier_eval(x)?;
        let filtered = self.safety_filter(x, &self.nominal_controller(x))?;
        let u = filtered.u;
        let (mean_hbar, _) = self.cond_moments_hbar(x, &u)?;
        let (mean_h, var_h) = self.cond_moments_h(x, &u);
        let mut d = [0.0; 4];
        self.disturbance.sample_into(rng, &mut d);
        let next = self.step(x, &u, &Vector4::from(d));
        Ok(Transition {
            next,
            cond_mean_h: mean_h,
            cond_var_h: var_h,
            input: Some([u[0], u[1]]),
            constraint_slack: Some(mean_hbar - self.config.alpha * eval.h),
            hbar_next: Some(self.hbar(&eval, &next)),
        })
    }
}
