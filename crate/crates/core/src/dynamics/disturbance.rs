//! Disturbance families with closed-form moments.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Below this acceptance rate the truncated Gaussian is sampled through the
/// inverse CDF instead of by rejection.
const REJECTION_MIN_MASS: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Disturbance {
    UniformInterval {
        lo: f64,
        hi: f64,
    },
    TruncatedGaussian {
        mean: f64,
        std: f64,
        lo: f64,
        hi: f64,
    },
    /// `(value, probability)` atoms.
    Categorical {
        atoms: Vec<(f64, f64)>,
    },
    UniformDisk2 {
        radius: f64,
    },
    /// Independent uniform 2-disks, one per consecutive pair of coordinates.
    ProductOfDisks {
        radii: Vec<f64>,
    },
    /// Uniform on the `dim`-dimensional ball.
    UniformBall {
        dim: usize,
        radius: f64,
    },
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl Disturbance {
    /// Uniform `[−1, 1]`.
    pub fn unit_uniform() -> Self {
        Disturbance::UniformInterval { lo: -1.0, hi: 1.0 }
    }

    /// `N(0, std²)` truncated to `[−1, 1]`.
    pub fn unit_truncated_gaussian(std: f64) -> Self {
        Disturbance::TruncatedGaussian {
            mean: 0.0,
            std,
            lo: -1.0,
            hi: 1.0,
        }
    }

    /// Zero-mean two-point law: `−1` w.p. 1/6, `1/5` w.p. 5/6.
    pub fn skewed_two_point() -> Self {
        Disturbance::Categorical {
            atoms: vec![(-1.0, 1.0 / 6.0), (0.2, 5.0 / 6.0)],
        }
    }

    /// The serialized family tag.
    pub fn family(&self) -> &'static str {
        match self {
            Disturbance::UniformInterval { .. } => "uniform_interval",
            Disturbance::TruncatedGaussian { .. } => "truncated_gaussian",
            Disturbance::Categorical { .. } => "categorical",
            Disturbance::UniformDisk2 { .. } => "uniform_disk2",
            Disturbance::ProductOfDisks { .. } => "product_of_disks",
            Disturbance::UniformBall { .. } => "uniform_ball",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Disturbance::UniformInterval { .. }
            | Disturbance::TruncatedGaussian { .. }
            | Disturbance::Categorical { .. } => 1,
            Disturbance::UniformDisk2 { .. } => 2,
            Disturbance::ProductOfDisks { radii } => 2 * radii.len(),
            Disturbance::UniformBall { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidDistribution(m));
        let radius_ok = |r: f64| r >= 0.0 && r.is_finite();
        match self {
            Disturbance::UniformInterval { lo, hi } => {
                if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                    return bad(format!("uniform interval needs finite lo <= hi, got [{lo}, {hi}]"));
                }
            }
            Disturbance::TruncatedGaussian { mean, std, lo, hi } => {
                if !(lo < hi) {
                    return bad(format!("truncated gaussian needs lo < hi, got [{lo}, {hi}]"));
                }
                if !(*std > 0.0) || !std.is_finite() || !mean.is_finite() {
                    return bad(format!("truncated gaussian needs finite mean and std > 0, got {mean}, {std}"));
                }
                if self.truncated_mass() <= 0.0 {
                    return bad("truncation interval carries no probability mass".into());
                }
            }
            Disturbance::Categorical { atoms } => {
                if atoms.is_empty() {
                    return bad("categorical needs at least one atom".into());
                }
                if atoms.iter().any(|(v, p)| !v.is_finite() || !(*p >= 0.0)) {
                    return bad("categorical atoms need finite values and probabilities >= 0".into());
                }
                let total: f64 = atoms.iter().map(|(_, p)| p).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return bad(format!("categorical probabilities sum to {total}, not 1"));
                }
            }
            Disturbance::UniformDisk2 { radius } => {
                if !radius_ok(*radius) {
                    return bad(format!("radius must be >= 0, got {radius}"));
                }
            }
            Disturbance::ProductOfDisks { radii } => {
                if radii.is_empty() || radii.iter().any(|r| !radius_ok(*r)) {
                    return bad(format!("product of disks needs radii >= 0, got {radii:?}"));
                }
            }
            Disturbance::UniformBall { dim, radius } => {
                if *dim == 0 || !radius_ok(*radius) {
                    return bad(format!("ball needs dim >= 1 and radius >= 0, got {dim}, {radius}"));
                }
            }
        }
        Ok(())
    }

    fn truncated_mass(&self) -> f64 {
        match *self {
            Disturbance::TruncatedGaussian { mean, std, lo, hi } => {
                norm_cdf((hi - mean) / std) - norm_cdf((lo - mean) / std)
            }
            _ => 1.0,
        }
    }

    /// Draw one sample into `out`, which must hold `dim()` entries.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        match self {
            Disturbance::UniformInterval { lo, hi } => {
                out[0] = lo + (hi - lo) * rng.random::<f64>();
            }
            Disturbance::TruncatedGaussian { mean, std, lo, hi } => {
                out[0] = sample_truncated(rng, *mean, *std, *lo, *hi, self.truncated_mass());
            }
            Disturbance::Categorical { atoms } => {
                let u: f64 = if atoms.len() == 1 { 0.0 } else { rng.random() };
                let mut acc = 0.0;
                out[0] = atoms[atoms.len() - 1].0;
                for (v, p) in atoms {
                    acc += p;
                    if u < acc {
                        out[0] = *v;
                        break;
                    }
                }
            }
            Disturbance::UniformDisk2 { radius } => sample_disk(rng, *radius, out),
            Disturbance::ProductOfDisks { radii } => {
                for (chunk, r) in out.chunks_mut(2).zip(radii) {
                    sample_disk(rng, *r, chunk);
                }
            }
            Disturbance::UniformBall { dim, radius } => {
                let mut norm2 = 0.0;
                while norm2 == 0.0 {
                    norm2 = 0.0;
                    for v in out.iter_mut() {
                        *v = rng.sample(StandardNormal);
                        norm2 += *v * *v;
                    }
                }
                let scale = radius * rng.random::<f64>().powf(1.0 / *dim as f64) / norm2.sqrt();
                out.iter_mut().for_each(|v| *v *= scale);
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        out
    }

    /// Exact mean vector and covariance matrix.
    pub fn exact_moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.dim();
        match self {
            Disturbance::UniformInterval { lo, hi } => (
                DVector::from_element(1, 0.5 * (lo + hi)),
                DMatrix::from_element(1, 1, (hi - lo).powi(2) / 12.0),
            ),
            Disturbance::TruncatedGaussian { mean, std, lo, hi } => {
                let (m, v) = truncated_moments(*mean, *std, *lo, *hi);
                (DVector::from_element(1, m), DMatrix::from_element(1, 1, v))
            }
            Disturbance::Categorical { atoms } => {
                let m: f64 = atoms.iter().map(|(v, p)| v * p).sum();
                let var: f64 = atoms.iter().map(|(v, p)| p * (v - m).powi(2)).sum();
                (DVector::from_element(1, m), DMatrix::from_element(1, 1, var))
            }
            Disturbance::UniformDisk2 { radius } => (
                DVector::zeros(2),
                DMatrix::identity(2, 2) * (radius * radius / 4.0),
            ),
            Disturbance::ProductOfDisks { radii } => {
                let diag = DVector::from_iterator(n, radii.iter().flat_map(|r| [r * r / 4.0; 2]));
                (DVector::zeros(n), DMatrix::from_diagonal(&diag))
            }
            Disturbance::UniformBall { dim, radius } => (
                DVector::zeros(n),
                DMatrix::identity(n, n) * (radius * radius / (*dim as f64 + 2.0)),
            ),
        }
    }

    /// Largest `‖d‖` over the support.
    pub fn sup_norm(&self) -> f64 {
        match self {
            Disturbance::UniformInterval { lo, hi } => lo.abs().max(hi.abs()),
            Disturbance::TruncatedGaussian { lo, hi, .. } => lo.abs().max(hi.abs()),
            Disturbance::Categorical { atoms } => {
                atoms.iter().map(|(v, _)| v.abs()).fold(0.0, f64::max)
            }
            Disturbance::UniformDisk2 { radius } | Disturbance::UniformBall { radius, .. } => {
                *radius
            }
            Disturbance::ProductOfDisks { radii } => radii.iter().map(|r| r * r).sum::<f64>().sqrt(),
        }
    }
}

fn sample_disk<R: Rng + ?Sized>(rng: &mut R, radius: f64, out: &mut [f64]) {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    out[0] = r * theta.cos();
    out[1] = r * theta.sin();
}

fn sample_truncated<R: Rng + ?Sized>(
    rng: &mut R,
    mean: f64,
    std: f64,
    lo: f64,
    hi: f64,
    mass: f64,
) -> f64 {
    if mass >= REJECTION_MIN_MASS {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            let x = mean + std * z;
            if (lo..=hi).contains(&x) {
                return x;
            }
        }
    }
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    let a = norm_cdf((lo - mean) / std);
    let u = a + mass * rng.random::<f64>();
    (mean + std * n.inverse_cdf(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))).clamp(lo, hi)
}

/// Mean and variance of `N(mean, std²)` conditioned on `[lo, hi]`.
pub fn truncated_moments(mean: f64, std: f64, lo: f64, hi: f64) -> (f64, f64) {
    let a = (lo - mean) / std;
    let b = (hi - mean) / std;
    let z = norm_cdf(b) - norm_cdf(a);
    let (pa, pb) = (norm_pdf(a), norm_pdf(b));
    // a·φ(a) → 0 as a → −∞
    let apa = if a.is_finite() { a * pa } else { 0.0 };
    let bpb = if b.is_finite() { b * pb } else { 0.0 };
    let shift = (pa - pb) / z;
    (
        mean + std * shift,
        std * std * (1.0 + (apa - bpb) / z - shift * shift),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_stats(d: &Disturbance, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = d.dim();
        let mut sum = vec![0.0; dim];
        let mut sum2 = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        for _ in 0..n {
            d.sample_into(&mut rng, &mut buf);
            for i in 0..dim {
                sum[i] += buf[i];
                sum2[i] += buf[i] * buf[i];
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let var = sum2
            .iter()
            .zip(&mean)
            .map(|(s, m)| s / n as f64 - m * m)
            .collect();
        (mean, var)
    }

    #[test]
    fn exact_moment_values() {
        let (m, c) = Disturbance::unit_uniform().exact_moments();
        assert_eq!(m[0], 0.0);
        assert!((c[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);

        let (m, c) = Disturbance::skewed_two_point().exact_moments();
        assert!(m[0].abs() < 1e-15);
        assert!((c[(0, 0)] - 0.2).abs() < 1e-15);

        // reference values from scipy.stats.truncnorm
        let (m, c) = Disturbance::unit_truncated_gaussian(1.0).exact_moments();
        assert!(m[0].abs() < 1e-15);
        assert!((c[(0, 0)] - 0.291_125_094_772_793).abs() < 1e-13);
        let (_, c) = Disturbance::unit_truncated_gaussian(1.0 / 3.0).exact_moments();
        assert!((c[(0, 0)] - 0.108_148_547_184_727).abs() < 1e-13);

        let (_, c) = Disturbance::UniformDisk2 { radius: 0.06 }.exact_moments();
        assert!((c[(0, 0)] - 0.0009).abs() < 1e-15 && c[(0, 1)] == 0.0);
    }

    #[test]
    fn degenerate_categorical() {
        let d = Disturbance::Categorical { atoms: vec![(5.0, 1.0)] };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut rng), vec![5.0]);
        }
    }

    #[test]
    fn validation() {
        assert!(Disturbance::Categorical { atoms: vec![(1.0, 0.5), (2.0, 0.4)] }
            .validate()
            .is_err());
        assert!(Disturbance::TruncatedGaussian { mean: 0.0, std: 1.0, lo: 1.0, hi: 1.0 }
            .validate()
            .is_err());
        assert!(Disturbance::UniformDisk2 { radius: -0.1 }.validate().is_err());
        assert!(Disturbance::skewed_two_point().validate().is_ok());
    }

    #[test]
    fn samples_stay_in_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let disk = Disturbance::UniformDisk2 { radius: 0.3 };
        let ball = Disturbance::UniformBall { dim: 4, radius: 0.3 };
        let far = Disturbance::TruncatedGaussian { mean: 0.0, std: 0.1, lo: 0.5, hi: 0.6 };
        for _ in 0..10_000 {
            let s = disk.sample(&mut rng);
            assert!(s[0].hypot(s[1]) <= 0.3 + 1e-15);
            let s = ball.sample(&mut rng);
            assert!(s.iter().map(|v| v * v).sum::<f64>().sqrt() <= 0.3 + 1e-15);
            let s = far.sample(&mut rng)[0];
            assert!((0.5..=0.6).contains(&s));
        }
    }

    #[test]
    fn sample_moments_match_exact() {
        let families = [
            Disturbance::unit_uniform(),
            Disturbance::unit_truncated_gaussian(1.0),
            Disturbance::unit_truncated_gaussian(1.0 / 3.0),
            Disturbance::skewed_two_point(),
            Disturbance::TruncatedGaussian { mean: 0.0, std: 0.1, lo: 0.25, hi: 0.6 },
            Disturbance::UniformDisk2 { radius: 0.5 },
            Disturbance::ProductOfDisks { radii: vec![0.2, 0.4] },
            Disturbance::UniformBall { dim: 4, radius: 1.0 },
        ];
        let n = 200_000;
        for (i, d) in families.iter().enumerate() {
            let (m, c) = d.exact_moments();
            let (sm, sv) = sample_stats(d, n, 100 + i as u64);
            for j in 0..d.dim() {
                let se = (c[(j, j)] / n as f64).sqrt();
                assert!((sm[j] - m[j]).abs() <= 5.0 * se + 1e-15, "{d:?} mean {j}");
                // variance of the sample variance is bounded by sup^4 / n
                let se_v = d.sup_norm().powi(2) / (n as f64).sqrt();
                assert!((sv[j] - c[(j, j)]).abs() <= 5.0 * se_v, "{d:?} var {j}");
            }
        }
    }
}
