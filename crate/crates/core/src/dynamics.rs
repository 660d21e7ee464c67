//! Forward noising, the deterministic unified reverse process, the DDPM
//! posterior step, and error-injection experiments driven by an exact oracle
//! in place of a trained network.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::conversions::{combine, consistency, noise_pred, Observation};
use crate::error::{check_dims, Error, Result};
use crate::output::{csv_io, csv_writer, fmt_real};
use crate::schedules::{uniform_grid, Schedule};

/// `X_t = a11(t)·z + a12(t)·eps`
pub fn forward(schedule: &Schedule, z: &[f64], eps: &[f64], t: f64) -> Result<Vec<f64>> {
    check_dims(z.len(), eps.len())?;
    let a = schedule.coefficients(t)?;
    Ok(combine(a.a11, z, a.a12, eps))
}

/// Stand-in for `f_θ` that knows the true `(Z, ε)` and returns the exact
/// target `a21(t)·Z + a22(t)·ε`, optionally shifted by a fitting error.
#[derive(Debug, Clone, PartialEq)]
pub struct OraclePredictor {
    pub z_true: Vec<f64>,
    pub eps_true: Vec<f64>,
    pub delta: Option<Vec<f64>>,
    /// Restricts the error to this time. `None` applies it at every call.
    pub delta_time: Option<f64>,
}

impl OraclePredictor {
    pub fn new(z_true: Vec<f64>, eps_true: Vec<f64>) -> Result<Self> {
        if z_true.is_empty() {
            return Err(Error::InvalidParameter("oracle dimension must be at least 1".into()));
        }
        check_dims(z_true.len(), eps_true.len())?;
        Ok(Self {
            z_true,
            eps_true,
            delta: None,
            delta_time: None,
        })
    }

    pub fn with_delta(mut self, delta: Vec<f64>, delta_time: Option<f64>) -> Result<Self> {
        check_dims(self.z_true.len(), delta.len())?;
        self.delta = Some(delta);
        self.delta_time = delta_time;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.z_true.len()
    }

    fn injects_at(&self, t: f64) -> bool {
        match self.delta_time {
            None => true,
            Some(at) => (at - t).abs() <= 1e-12 * at.abs().max(1.0),
        }
    }

    pub fn exact(&self, schedule: &Schedule, t: f64) -> Result<Vec<f64>> {
        let a = schedule.coefficients(t)?;
        Ok(combine(a.a21, &self.z_true, a.a22, &self.eps_true))
    }

    pub fn predict(&self, schedule: &Schedule, t: f64) -> Result<Vec<f64>> {
        let mut f = self.exact(schedule, t)?;
        if let Some(delta) = &self.delta {
            if self.injects_at(t) {
                f.iter_mut().zip(delta).for_each(|(f, d)| *f += d);
            }
        }
        Ok(f)
    }

    pub fn observe(&self, schedule: &Schedule, t: f64, x: Vec<f64>) -> Result<Observation> {
        let f = self.predict(schedule, t)?;
        Observation::new(t, x, f)
    }
}

/// Unified reverse update without the strict time-order check.
fn unified_step(schedule: &Schedule, obs: &Observation, t_prime: f64) -> Result<Vec<f64>> {
    if t_prime > obs.t {
        return Err(Error::TimeOrder {
            t: obs.t,
            t_prime,
        });
    }
    // a zero-length step is the identity, exactly
    if t_prime == obs.t {
        schedule.coefficients(t_prime)?;
        return Ok(obs.x.clone());
    }
    let target = schedule.coefficients(t_prime)?;
    let z = consistency(schedule, obs)?;
    let eps = noise_pred(schedule, obs)?;
    Ok(combine(target.a11, &z, target.a12, &eps))
}

/// `X_{t′} = a11(t′)·F_θ + a12(t′)·G_θ` for `t′ < t`.
pub fn reverse_step(schedule: &Schedule, obs: &Observation, t_prime: f64) -> Result<Vec<f64>> {
    if t_prime >= obs.t {
        return Err(Error::TimeOrder {
            t: obs.t,
            t_prime,
        });
    }
    unified_step(schedule, obs, t_prime)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub t: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub schedule: Schedule,
    pub seed: Option<u64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        &self.steps.last().expect("trajectory has an initial state").x
    }

    /// Columns `step_index,t,coordinate_index,x_value`.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["step_index", "t", "coordinate_index", "x_value"])
            .map_err(csv_io)?;
        for (i, step) in self.steps.iter().enumerate() {
            for (j, v) in step.x.iter().enumerate() {
                w.write_record([i.to_string(), fmt_real(step.t), j.to_string(), fmt_real(*v)])
                    .map_err(csv_io)?;
            }
        }
        w.flush()
    }
}

/// Times visited by an `n_steps` reverse run: uniform from `tf − clamp_eps`
/// down to `t0`. The last point is never a source time, so it may sit on the
/// endpoint where A(t0) can be singular.
pub fn reverse_time_grid(schedule: &Schedule, n_steps: usize) -> Vec<f64> {
    let start = schedule.domain.tf - schedule.domain.clamp_eps;
    uniform_grid(start, schedule.domain.t0, n_steps + 1)
}

pub fn reverse_trajectory(
    schedule: &Schedule,
    predictor: &OraclePredictor,
    n_steps: usize,
    x_init: Option<&[f64]>,
) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter("n_steps must be at least 1".into()));
    }
    let times = reverse_time_grid(schedule, n_steps);
    let mut x = match x_init {
        Some(x) => {
            check_dims(predictor.dim(), x.len())?;
            x.to_vec()
        }
        None => forward(schedule, &predictor.z_true, &predictor.eps_true, times[0])?,
    };
    let mut steps = Vec::with_capacity(times.len());
    steps.push(TrajectoryStep { t: times[0], x: x.clone() });
    for pair in times.windows(2) {
        let obs = predictor.observe(schedule, pair[0], x)?;
        x = reverse_step(schedule, &obs, pair[1])?;
        steps.push(TrajectoryStep { t: pair[1], x: x.clone() });
    }
    Ok(Trajectory {
        steps,
        schedule: *schedule,
        seed: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceMode {
    /// ς_t² = ((1 − α_{t′}²)/(1 − α_t²))·β_t
    DdpmPosterior,
    /// ς_t = 0 (DDIM)
    Deterministic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdpmStep {
    pub x: Vec<f64>,
    /// ς_t²
    pub variance: f64,
    /// `1 − α_{t′}² − ς_t²` rounded below zero and was clamped.
    pub radicand_clamped: bool,
}

/// Posterior variance ς_t² of the DDPM reverse kernel between `t` and `t′`.
pub fn ddpm_posterior_variance(schedule: &Schedule, t: f64, t_prime: f64) -> Result<f64> {
    if !schedule.family.is_ddpm() {
        return Err(Error::NotDdpm(schedule.family));
    }
    if t_prime > t {
        return Err(Error::TimeOrder { t, t_prime });
    }
    let cur = schedule.coefficients(t)?;
    let prev = schedule.coefficients(t_prime)?;
    if cur.a12 <= 0.0 {
        return Err(Error::SingularParameterization { t, det: cur.det });
    }
    let beta = 1.0 - (cur.a11 * cur.a11) / (prev.a11 * prev.a11);
    // 1 − α² is evaluated as σ² (variance preserving), which keeps precision near t0
    Ok((prev.a12 * prev.a12) / (cur.a12 * cur.a12) * beta)
}

pub fn ddpm_stochastic_step(
    schedule: &Schedule,
    obs: &Observation,
    t_prime: f64,
    mode: VarianceMode,
    rng_seed: u64,
) -> Result<DdpmStep> {
    if !schedule.family.is_ddpm() {
        return Err(Error::NotDdpm(schedule.family));
    }
    match mode {
        VarianceMode::Deterministic => Ok(DdpmStep {
            x: unified_step(schedule, obs, t_prime)?,
            variance: 0.0,
            radicand_clamped: false,
        }),
        VarianceMode::DdpmPosterior => {
            let variance = ddpm_posterior_variance(schedule, obs.t, t_prime)?;
            let prev = schedule.coefficients(t_prime)?;
            let z = consistency(schedule, obs)?;
            let eps = noise_pred(schedule, obs)?;
            let radicand = prev.a12 * prev.a12 - variance;
            let radicand_clamped = radicand < 0.0;
            let mean = combine(prev.a11, &z, radicand.max(0.0).sqrt(), &eps);
            let sd = variance.max(0.0).sqrt();
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let x = mean
                .into_iter()
                .map(|m| {
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    m + sd * xi
                })
                .collect();
            Ok(DdpmStep {
                x,
                variance,
                radicand_clamped,
            })
        }
    }
}

/// `‖X_{t′}(f + δ) − X_{t′}(f)‖ / ‖δ‖` for one reverse step from `t`.
pub fn measure_amplification_along(
    schedule: &Schedule,
    t: f64,
    t_prime: f64,
    z: &[f64],
    eps: &[f64],
    delta: &[f64],
) -> Result<f64> {
    let oracle = OraclePredictor::new(z.to_vec(), eps.to_vec())?;
    let perturbed = oracle.clone().with_delta(delta.to_vec(), Some(t))?;
    let x = forward(schedule, z, eps, t)?;
    let clean = unified_step(schedule, &oracle.observe(schedule, t, x.clone())?, t_prime)?;
    let noisy = unified_step(schedule, &perturbed.observe(schedule, t, x)?, t_prime)?;
    let num = clean
        .iter()
        .zip(&noisy)
        .map(|(a, b)| (b - a).powi(2))
        .sum::<f64>()
        .sqrt();
    let den = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(Error::InvalidParameter("delta must be nonzero".into()));
    }
    Ok(num / den)
}

const PROBE_Z: [f64; 4] = [0.8, -1.3, 0.25, 2.1];
const PROBE_EPS: [f64; 4] = [-0.6, 0.9, 1.7, -0.35];
const PROBE_DIR: [f64; 4] = [1.0, -2.0, 3.0, 0.5];

/// Empirical amplification measured with a fixed probe state and an error of
/// norm `delta_norm` injected at `t`.
pub fn measure_amplification(schedule: &Schedule, t: f64, t_prime: f64, delta_norm: f64) -> Result<f64> {
    if !(delta_norm > 0.0 && delta_norm.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "delta_norm must be positive, got {delta_norm}"
        )));
    }
    let norm = PROBE_DIR.iter().map(|d| d * d).sum::<f64>().sqrt();
    let delta: Vec<f64> = PROBE_DIR.iter().map(|d| d * delta_norm / norm).collect();
    measure_amplification_along(schedule, t, t_prime, &PROBE_Z, &PROBE_EPS, &delta)
}
