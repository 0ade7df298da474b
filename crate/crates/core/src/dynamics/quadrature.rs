//! `E‖a + b‖` for a fixed planar offset `a` and a rotation-invariant random
//! `b` supported on a disk.

use std::f64::consts::{FRAC_2_PI, PI};
use std::sync::OnceLock;

const GL_POINTS: usize = 40;

/// Radial law of a rotation-invariant disturbance on the disk of radius `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialLaw {
    /// Uniform on the disk: density `2ρ/R²`.
    Disk,
    /// Planar marginal of the uniform 4-ball: density `4ρ(R² − ρ²)/R⁴`.
    Ball4Marginal,
}

impl RadialLaw {
    fn density(self, rho: f64, radius: f64) -> f64 {
        let r2 = radius * radius;
        match self {
            RadialLaw::Disk => 2.0 * rho / r2,
            RadialLaw::Ball4Marginal => 4.0 * rho * (r2 - rho * rho) / (r2 * r2),
        }
    }

    /// `E‖b‖²`.
    pub fn second_moment(self, radius: f64) -> f64 {
        match self {
            RadialLaw::Disk => radius * radius / 2.0,
            RadialLaw::Ball4Marginal => radius * radius / 3.0,
        }
    }
}

/// Gauss-Legendre nodes and weights on `[−1, 1]`.
fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence for P_n(x) and its derivative
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        (nodes, weights)
    })
}

fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let (nodes, weights) = gauss_legendre();
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    nodes
        .iter()
        .zip(weights)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Complete elliptic integral of the second kind `E(m)`, parameter `m = k²`.
pub fn elliptic_e(m: f64) -> f64 {
    if m >= 1.0 {
        return 1.0;
    }
    let mut a = 1.0;
    let mut b = (1.0 - m).sqrt();
    let mut c = m.sqrt();
    let mut c2_sum = 0.5 * m;
    let mut pow2 = 0.5;
    for _ in 0..64 {
        let next_a = 0.5 * (a + b);
        b = (a * b).sqrt();
        // c_{n+1} = (a_n − b_n)/2 without the cancellation
        c = c * c / (4.0 * next_a);
        a = next_a;
        pow2 *= 2.0;
        c2_sum += pow2 * c * c;
        if pow2 * c * c < 1e-18 * c2_sum {
            break;
        }
    }
    PI / (2.0 * a) * (1.0 - c2_sum)
}

/// Mean of `‖a + ρ(cos θ, sin θ)‖` over a uniform angle `θ`.
fn ring_mean(a: f64, rho: f64) -> f64 {
    let s = a + rho;
    if s == 0.0 {
        return 0.0;
    }
    FRAC_2_PI * s * elliptic_e(4.0 * a * rho / (s * s))
}

/// `E‖a + b‖` with `‖a‖ = a_norm` and `b` following `law` on the disk of
/// radius `radius`.
pub fn expected_norm(a_norm: f64, radius: f64, law: RadialLaw) -> f64 {
    if radius == 0.0 {
        return a_norm;
    }
    let f = |rho: f64| ring_mean(a_norm, rho) * law.density(rho, radius);
    // the ring mean has a kink at ρ = ‖a‖
    let split = a_norm.min(radius);
    integrate(f, 0.0, split) + integrate(f, split, radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let v = integrate(|x| x.powi(7) - 3.0 * x * x + 1.0, -1.0, 2.0);
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0) + 3.0;
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn elliptic_reference_values() {
        assert!((elliptic_e(0.0) - PI / 2.0).abs() < 1e-15);
        // scipy.special.ellipe(0.5)
        assert!((elliptic_e(0.5) - 1.350_643_881_047_675_5).abs() < 1e-14);
        assert!((elliptic_e(0.99) - 1.015_993_545_025_223_9).abs() < 1e-13);
        assert_eq!(elliptic_e(1.0), 1.0);
    }

    #[test]
    fn centered_disk_mean_norm() {
        // E‖b‖ = 2R/3 on the uniform disk
        assert!((expected_norm(0.0, 0.3, RadialLaw::Disk) - 0.2).abs() < 1e-14);
        // 4-ball marginal: ∫ρ·4ρ(R²−ρ²)/R⁴ = 8R/15
        assert!((expected_norm(0.0, 1.0, RadialLaw::Ball4Marginal) - 8.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn far_offset_is_jensen_tight() {
        // ‖a + b‖ ≈ ‖a‖ + ‖b‖²/(4‖a‖) on average for ‖a‖ ≫ R
        let (a, r) = (100.0, 0.1);
        let e = expected_norm(a, r, RadialLaw::Disk);
        assert!(e >= a);
        assert!((e - a - r * r / 2.0 / (4.0 * a)).abs() < 1e-12);
    }

    #[test]
    fn brute_force_agreement() {
        for &(a, r) in &[(0.05, 0.06), (0.06, 0.06), (0.5, 0.06), (0.01, 1.0)] {
            let n = 2000;
            let mut acc = 0.0;
            for i in 0..n {
                let rho = r * (i as f64 + 0.5) / n as f64;
                let w = 2.0 * rho / (r * r) * r / n as f64;
                let mut ring = 0.0;
                for j in 0..n {
                    let t = std::f64::consts::TAU * (j as f64 + 0.5) / n as f64;
                    ring += (a * a + rho * rho + 2.0 * a * rho * t.cos()).sqrt();
                }
                acc += w * ring / n as f64;
            }
            let e = expected_norm(a, r, RadialLaw::Disk);
            assert!((e - acc).abs() < 1e-6 * r, "a={a} r={r}: {e} vs {acc}");
        }
    }
}
