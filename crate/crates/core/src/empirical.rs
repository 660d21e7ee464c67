//! Monte Carlo estimates of the correlation and variance of the noisy state,
//! for comparison against the analytic values.
//!
//! Samples are drawn in fixed-size blocks, each from its own ChaCha8 stream
//! selected by block index, so an estimate depends only on `(seed, n)` and
//! not on how many threads evaluate the blocks. Block results are reduced in
//! block order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::pearson;
use crate::error::{Error, Result};
use crate::schedules::Schedule;

pub const DEFAULT_MC_N: usize = 1_000_000;
pub const MIN_MC_N: usize = 1000;

const BLOCK: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    StandardNormal,
    GaussianMixture,
}

/// Per-coordinate i.i.d. data distribution with unit variance.
#[derive(Debug, Clone, PartialEq)]
pub struct DataDistribution {
    pub kind: DistributionKind,
    pub mixture_params: Vec<MixtureComponent>,
    pub dim: usize,
}

impl DataDistribution {
    pub fn standard_normal(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            kind: DistributionKind::StandardNormal,
            mixture_params: Vec::new(),
            dim,
        })
    }

    pub fn gaussian_mixture(components: Vec<MixtureComponent>, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if components.is_empty() {
            return Err(Error::InvalidDistribution("mixture has no components".into()));
        }
        if components
            .iter()
            .any(|c| !(c.weight > 0.0 && c.std >= 0.0 && c.mean.is_finite() && c.std.is_finite()))
        {
            return Err(Error::InvalidDistribution(
                "weights must be positive and std non-negative".into(),
            ));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}, not 1")));
        }
        let var = mixture_variance(&components);
        if (var - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "per-coordinate variance is {var}, not 1"
            )));
        }
        Ok(Self {
            kind: DistributionKind::GaussianMixture,
            mixture_params: components,
            dim,
        })
    }

    /// Two equal-weight modes at ±0.8 with std 0.6.
    pub fn default_mixture(dim: usize) -> Result<Self> {
        let half = |mean| MixtureComponent {
            weight: 0.5,
            mean,
            std: 0.6,
        };
        Self::gaussian_mixture(vec![half(-0.8), half(0.8)], dim)
    }

    pub fn variance(&self) -> f64 {
        match self.kind {
            DistributionKind::StandardNormal => 1.0,
            DistributionKind::GaussianMixture => mixture_variance(&self.mixture_params),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let xi: f64 = rng.sample(StandardNormal);
        match self.kind {
            DistributionKind::StandardNormal => xi,
            DistributionKind::GaussianMixture => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let last = self.mixture_params.len() - 1;
                for (i, c) in self.mixture_params.iter().enumerate() {
                    acc += c.weight;
                    if u < acc || i == last {
                        return c.mean + c.std * xi;
                    }
                }
                unreachable!()
            }
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::InvalidDistribution("dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn mixture_variance(components: &[MixtureComponent]) -> f64 {
    let mean: f64 = components.iter().map(|c| c.weight * c.mean).sum();
    components
        .iter()
        .map(|c| c.weight * (c.std * c.std + (c.mean - mean).powi(2)))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
}

/// Applies `visit` to every block of `n` draws of `(Z, ε)`, each a flat
/// row-major `rows × dim` slice, and returns the per-block results in order.
fn map_blocks<T, F>(dist: &DataDistribution, n: usize, seed: u64, visit: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64], &[f64]) -> T + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let rows = BLOCK.min(n - b * BLOCK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let len = rows * dist.dim;
            let mut z = Vec::with_capacity(len);
            let mut eps = Vec::with_capacity(len);
            for _ in 0..rows {
                for _ in 0..dist.dim {
                    z.push(dist.sample(&mut rng));
                }
                for _ in 0..dist.dim {
                    eps.push(rng.sample::<f64, _>(StandardNormal));
                }
            }
            visit(&z, &eps)
        })
        .collect()
}

/// A single `(Z, ε)` draw of dimension `dist.dim`.
pub fn draw_state(dist: &DataDistribution, seed: u64) -> (Vec<f64>, Vec<f64>) {
    map_blocks(dist, 1, seed, |z, eps| (z.to_vec(), eps.to_vec()))
        .pop()
        .expect("one block")
}

fn check_n(n: usize) -> Result<()> {
    if n < MIN_MC_N {
        Err(Error::InvalidParameter(format!("Monte Carlo n must be at least {MIN_MC_N}, got {n}")))
    } else {
        Ok(())
    }
}

/// Sample Pearson correlation of `(X_t, ω)` pooled over coordinates.
///
/// The standard error is the sample standard deviation of the correlation's
/// influence function `u·v − r(u² + v²)/2` (u, v standardized) over √n.
pub fn estimate_pearson(
    schedule: &Schedule,
    dist: &DataDistribution,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_n(n)?;
    let a = schedule.coefficients(t)?;
    let project = |z: f64, e: f64| (a.a11 * z + a.a12 * e, a.a21 * z + a.a22 * e);
    let count = (n * dist.dim) as f64;

    let sums = map_blocks(dist, n, seed, |z, eps| {
        z.iter().zip(eps).fold((0.0, 0.0), |(sx, sw), (&z, &e)| {
            let (x, w) = project(z, e);
            (sx + x, sw + w)
        })
    });
    let (sx, sw) = sums.iter().fold((0.0, 0.0), |acc, s| (acc.0 + s.0, acc.1 + s.1));
    let (mx, mw) = (sx / count, sw / count);

    let central = map_blocks(dist, n, seed, |z, eps| {
        z.iter().zip(eps).fold([0.0; 3], |acc, (&z, &e)| {
            let (x, w) = project(z, e);
            let (dx, dw) = (x - mx, w - mw);
            [acc[0] + dx * dx, acc[1] + dw * dw, acc[2] + dx * dw]
        })
    });
    let [sxx, sww, sxw] = central
        .iter()
        .fold([0.0; 3], |acc, c| [acc[0] + c[0], acc[1] + c[1], acc[2] + c[2]]);
    if sxx == 0.0 || sww == 0.0 {
        return Err(Error::DegenerateTarget { t });
    }
    let r = sxw / (sxx * sww).sqrt();

    let (sdx, sdw) = ((sxx / count).sqrt(), (sww / count).sqrt());
    let influence = map_blocks(dist, n, seed, |z, eps| {
        z.iter().zip(eps).fold((0.0, 0.0), |(s, s2), (&z, &e)| {
            let (x, w) = project(z, e);
            let (u, v) = ((x - mx) / sdx, (w - mw) / sdw);
            let g = u * v - 0.5 * r * (u * u + v * v);
            (s + g, s2 + g * g)
        })
    });
    let (s, s2) = influence.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let var_g = ((s2 - s * s / count) / (count - 1.0)).max(0.0);

    Ok(McEstimate {
        value: r,
        std_error: (var_g / count).sqrt(),
        n: n * dist.dim,
        seed,
    })
}

/// Sample variance of each coordinate of `X_t`.
pub fn estimate_variance(
    schedule: &Schedule,
    dist: &DataDistribution,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    check_n(n)?;
    let a = schedule.coefficients(t)?;
    let dim = dist.dim;
    let nf = n as f64;

    let sums = map_blocks(dist, n, seed, |z, eps| {
        let mut acc = vec![0.0; dim];
        for (i, (&z, &e)) in z.iter().zip(eps).enumerate() {
            acc[i % dim] += a.a11 * z + a.a12 * e;
        }
        acc
    });
    let means: Vec<f64> = (0..dim)
        .map(|j| sums.iter().map(|s| s[j]).sum::<f64>() / nf)
        .collect();

    let moments = map_blocks(dist, n, seed, |z, eps| {
        let mut acc = vec![(0.0, 0.0); dim];
        for (i, (&z, &e)) in z.iter().zip(eps).enumerate() {
            let j = i % dim;
            let d = (a.a11 * z + a.a12 * e - means[j]).powi(2);
            acc[j].0 += d;
            acc[j].1 += d * d;
        }
        acc
    });
    Ok((0..dim)
        .map(|j| {
            let (s, s2) = moments.iter().fold((0.0, 0.0), |acc, m| (acc.0 + m[j].0, acc.1 + m[j].1));
            let var_d = ((s2 - s * s / nf) / (nf - 1.0)).max(0.0);
            McEstimate {
                value: s / (nf - 1.0),
                std_error: (var_d / nf).sqrt(),
                n,
                seed,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub analytic: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
}

/// Analytic and empirical Ψ along `grid`. Every point reuses `seed`, so the
/// empirical curve is built from common random numbers.
pub fn correlation_curve(
    schedule: &Schedule,
    dist: &DataDistribution,
    grid: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    grid.iter()
        .map(|&t| {
            let est = estimate_pearson(schedule, dist, t, n, seed)?;
            Ok(CurvePoint {
                t,
                analytic: pearson(schedule, t)?,
                empirical: est.value,
                std_error: est.std_error,
                n: est.n,
                seed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::Family;

    #[test]
    fn mixture_validation() {
        let m = DataDistribution::default_mixture(2).unwrap();
        assert!((m.variance() - 1.0).abs() < 1e-12);
        let bad = vec![MixtureComponent { weight: 1.0, mean: 0.0, std: 0.9 }];
        assert!(DataDistribution::gaussian_mixture(bad, 1).is_err());
        let unnormalized = vec![
            MixtureComponent { weight: 0.6, mean: 0.0, std: 1.0 },
            MixtureComponent { weight: 0.6, mean: 0.0, std: 1.0 },
        ];
        assert!(DataDistribution::gaussian_mixture(unnormalized, 1).is_err());
        assert!(DataDistribution::standard_normal(0).is_err());
    }

    #[test]
    fn seed_determinism() {
        let s = Schedule::new(Family::RectifiedFlow);
        let d = DataDistribution::standard_normal(1).unwrap();
        let a = estimate_pearson(&s, &d, 0.3, 50_000, 11).unwrap();
        let b = estimate_pearson(&s, &d, 0.3, 50_000, 11).unwrap();
        assert_eq!(a, b);
        let c = estimate_pearson(&s, &d, 0.3, 50_000, 12).unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn thread_count_does_not_change_estimates() {
        let s = Schedule::new(Family::TrigFlow);
        let d = DataDistribution::default_mixture(3).unwrap();
        let reference = estimate_variance(&s, &d, 0.7, 100_000, 5).unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let other = single.install(|| estimate_variance(&s, &d, 0.7, 100_000, 5).unwrap());
        assert_eq!(reference, other);
    }

    #[test]
    fn correlation_is_distribution_free() {
        let d = DataDistribution::default_mixture(2).unwrap();
        for family in Family::ALL {
            let s = Schedule::new(family);
            let (lo, hi) = s.domain.clamped();
            for t in [lo + 0.3 * (hi - lo), lo + 0.8 * (hi - lo)] {
                let est = estimate_pearson(&s, &d, t, 200_000, 11).unwrap();
                let psi = pearson(&s, t).unwrap();
                assert!((est.value - psi).abs() < 4.0 * est.std_error, "{family} t={t}: {} vs {psi}", est.value);
            }
        }
    }

    #[test]
    fn rejects_small_n() {
        let s = Schedule::new(Family::TrigFlow);
        let d = DataDistribution::standard_normal(1).unwrap();
        assert!(estimate_pearson(&s, &d, 0.5, 999, 0).is_err());
    }

    #[test]
    fn variance_at_start_is_data_variance() {
        let s = Schedule::new(Family::EdmCommon);
        let d = DataDistribution::standard_normal(4).unwrap();
        for est in estimate_variance(&s, &d, 0.0, 200_000, 3).unwrap() {
            assert!((est.value - 1.0).abs() < 5.0 * est.std_error);
        }
    }

    #[test]
    fn curve_lengths() {
        let s = Schedule::new(Family::RectifiedFlow);
        let d = DataDistribution::standard_normal(1).unwrap();
        assert_eq!(correlation_curve(&s, &d, &[0.5], 10_000, 1).unwrap().len(), 1);
        assert!(correlation_curve(&s, &d, &[], 10_000, 1).unwrap().is_empty());
    }
}
