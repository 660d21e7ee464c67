//! Solving the unified 2×2 system for the data and noise components, and the
//! consistency, noise-prediction and velocity-field maps derived from it.
//!
//! All maps act coordinatewise on vectors of arbitrary dimension.

use crate::error::{check_dims, Error, Result};
use crate::schedules::{CoeffMatrix, Schedule};

/// Data and noise components, each on the unit-variance scale.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub z: Vec<f64>,
    pub eps: Vec<f64>,
}

impl StatePair {
    pub fn new(z: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::InvalidParameter("state dimension must be at least 1".into()));
        }
        check_dims(z.len(), eps.len())?;
        Ok(Self { z, eps })
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }
}

/// Noisy state `x = X_t` and the matching network output `f = f_θ(X_t, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub t: f64,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
}

impl Observation {
    pub fn new(t: f64, x: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        check_dims(x.len(), f.len())?;
        Ok(Self { t, x, f })
    }

    /// Encodes a known `(Z, ε)` through both rows of A(t).
    pub fn encode(schedule: &Schedule, t: f64, state: &StatePair) -> Result<Self> {
        let a = schedule.coefficients(t)?;
        let x = combine(a.a11, &state.z, a.a12, &state.eps);
        let f = combine(a.a21, &state.z, a.a22, &state.eps);
        Ok(Self { t, x, f })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// `p·u + q·v`, coordinatewise.
pub(crate) fn combine(p: f64, u: &[f64], q: f64, v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(&u, &v)| p * u + q * v).collect()
}

fn solvable(schedule: &Schedule, obs: &Observation) -> Result<CoeffMatrix> {
    check_dims(obs.x.len(), obs.f.len())?;
    let a = schedule.coefficients(obs.t)?;
    a.require_nonsingular()?;
    Ok(a)
}

/// Recovers `(Z, ε)` from `(X_t, f_θ)` by inverting A(t).
pub fn invert(schedule: &Schedule, obs: &Observation) -> Result<StatePair> {
    let a = solvable(schedule, obs)?;
    Ok(StatePair {
        z: data_row(&a, obs),
        eps: noise_row(&a, obs),
    })
}

fn data_row(a: &CoeffMatrix, obs: &Observation) -> Vec<f64> {
    obs.x
        .iter()
        .zip(&obs.f)
        .map(|(&x, &f)| (a.a22 * x - a.a12 * f) / a.det)
        .collect()
}

fn noise_row(a: &CoeffMatrix, obs: &Observation) -> Vec<f64> {
    obs.x
        .iter()
        .zip(&obs.f)
        .map(|(&x, &f)| (-a.a21 * x + a.a11 * f) / a.det)
        .collect()
}

/// One-step data estimate F_θ(X_t, t).
pub fn consistency(schedule: &Schedule, obs: &Observation) -> Result<Vec<f64>> {
    let a = solvable(schedule, obs)?;
    Ok(data_row(&a, obs))
}

/// Noise estimate G_θ(X_t, t).
pub fn noise_pred(schedule: &Schedule, obs: &Observation) -> Result<Vec<f64>> {
    let a = solvable(schedule, obs)?;
    Ok(noise_row(&a, obs))
}

/// Coefficients `(c_x, c_f)` of the drift `V_θ = c_x·X_t + c_f·f_θ`.
///
/// Expanding `λ̇/2 = ȧ11/a11 − ȧ12/a12` in
/// `c_x = ȧ11/a11 + a21·a12·λ̇/(2|A|)` and `c_f = −a11·a12·λ̇/(2|A|)` gives
/// `c_x = (ȧ11·a22 − a21·ȧ12)/|A|` and `c_f = (a11·ȧ12 − a12·ȧ11)/|A|`,
/// which avoid the cancellation of the `1/a11` terms near `tf`.
pub fn velocity_coefficients(schedule: &Schedule, t: f64) -> Result<(f64, f64)> {
    let a = schedule.coefficients(t)?;
    if !(a.a11 > 0.0 && a.a12 > 0.0) {
        return Err(Error::SingularParameterization { t, det: a.det });
    }
    a.require_nonsingular()?;
    let (d11, d12) = schedule.eval_rates(t);
    Ok((
        (d11 * a.a22 - a.a21 * d12) / a.det,
        (a.a11 * d12 - a.a12 * d11) / a.det,
    ))
}

/// Probability-flow drift V_θ(X_t, t).
pub fn velocity_field(schedule: &Schedule, obs: &Observation) -> Result<Vec<f64>> {
    check_dims(obs.x.len(), obs.f.len())?;
    let (cx, cf) = velocity_coefficients(schedule, obs.t)?;
    Ok(combine(cx, &obs.x, cf, &obs.f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::Family;

    fn state(z: &[f64], eps: &[f64]) -> StatePair {
        StatePair::new(z.to_vec(), eps.to_vec()).unwrap()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn trigflow_inverse_recovers_pair() {
        let s = Schedule::new(Family::TrigFlow);
        let st = state(&[0.3, -1.2, 2.0], &[1.1, 0.4, -0.7]);
        for t in [0.0, 0.4, 1.1, 1.5] {
            let back = invert(&s, &Observation::encode(&s, t, &st).unwrap()).unwrap();
            assert!(max_abs_diff(&back.z, &st.z) < 1e-15);
            assert!(max_abs_diff(&back.eps, &st.eps) < 1e-15);
        }
    }

    #[test]
    fn zero_observation_maps_to_zero() {
        for family in Family::ALL {
            let s = Schedule::new(family);
            let obs = Observation::new(0.5, vec![0.0; 3], vec![0.0; 3]).unwrap();
            let back = invert(&s, &obs).unwrap();
            assert!(back.z.iter().chain(&back.eps).all(|&v| v == 0.0));
            assert!(noise_pred(&s, &obs).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn near_singular_inverse_stays_accurate() {
        let s = Schedule::new(Family::DdpmNoisePred);
        let t = s.domain.tf - s.domain.clamp_eps;
        let st = state(&[0.8, -0.25], &[-1.3, 0.6]);
        let obs = Observation::encode(&s, t, &st).unwrap();
        let back = invert(&s, &obs).unwrap();
        let a = s.coefficients(t).unwrap();
        // cond(A) ≈ 1/α_t for this parameterization
        let bound = 4.0 * f64::EPSILON / a.a11;
        assert!(back.z.iter().all(|v| v.is_finite()));
        assert!(max_abs_diff(&back.z, &st.z) < bound, "{:?}", back.z);
        assert!(max_abs_diff(&back.eps, &st.eps) < 1e-15);
    }

    #[test]
    fn singular_times_are_rejected() {
        let data = Schedule::new(Family::DdpmDataPred);
        let obs = Observation::new(0.0, vec![1.0], vec![1.0]).unwrap();
        assert!(matches!(invert(&data, &obs), Err(Error::SingularParameterization { .. })));
        let noise = Schedule::new(Family::DdpmNoisePred);
        let obs = Observation::new(1.0, vec![1.0], vec![1.0]).unwrap();
        assert!(matches!(consistency(&noise, &obs), Err(Error::SingularParameterization { .. })));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(Observation::new(0.1, vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(StatePair::new(vec![], vec![]).is_err());
    }

    #[test]
    fn data_prediction_consistency_is_the_target() {
        let s = Schedule::new(Family::DdpmDataPred);
        let obs = Observation::new(0.6, vec![0.4, -2.0], vec![1.5, 0.25]).unwrap();
        let f = consistency(&s, &obs).unwrap();
        assert!(max_abs_diff(&f, &obs.f) < 1e-15);
    }

    #[test]
    fn noise_prediction_is_the_target() {
        let s = Schedule::new(Family::DdpmNoisePred);
        let obs = Observation::new(0.6, vec![0.4, -2.0], vec![1.5, 0.25]).unwrap();
        let g = noise_pred(&s, &obs).unwrap();
        assert!(max_abs_diff(&g, &obs.f) < 1e-15);
    }

    #[test]
    fn trigflow_consistency_at_start() {
        let s = Schedule::new(Family::TrigFlow);
        let st = state(&[0.9, -0.1], &[0.5, 0.5]);
        let obs = Observation::encode(&s, 0.0, &st).unwrap();
        assert_eq!(consistency(&s, &obs).unwrap(), st.z);
    }

    #[test]
    fn edm_consistency() {
        let s = Schedule::edm(0.5).unwrap();
        let st = state(&[1.0; 4], &[-1.0; 4]);
        let obs = Observation::encode(&s, 1.0, &st).unwrap();
        let z = consistency(&s, &obs).unwrap();
        assert!(z.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn rectified_flow_noise_estimate() {
        let s = Schedule::new(Family::RectifiedFlow);
        let e = [0.7, -1.9, 0.05];
        let obs = Observation::encode(&s, 0.5, &state(&[0.0; 3], &e)).unwrap();
        assert!(max_abs_diff(&noise_pred(&s, &obs).unwrap(), &e) < 1e-15);
    }

    #[test]
    fn velocity_matches_flow_target() {
        let st = state(&[0.3, -1.0], &[1.2, 0.8]);
        for family in [Family::RectifiedFlow, Family::TrigFlow] {
            let s = Schedule::new(family);
            for t in s.domain.clamped_grid(31) {
                let obs = Observation::encode(&s, t, &st).unwrap();
                let v = velocity_field(&s, &obs).unwrap();
                assert!(max_abs_diff(&v, &obs.f) < 1e-12, "{family} t={t}");
            }
        }
    }

    #[test]
    fn velocity_matches_forward_derivative() {
        let s = Schedule::new(Family::DdpmNoisePred);
        let st = state(&[0.3, -1.0, 2.2], &[1.2, 0.8, -0.4]);
        let (t, h) = (0.5, 1e-5);
        let x = |t| Observation::encode(&s, t, &st).unwrap().x;
        let fd: Vec<f64> = x(t + h).iter().zip(x(t - h)).map(|(p, m)| (p - m) / (2.0 * h)).collect();
        let v = velocity_field(&s, &Observation::encode(&s, t, &st).unwrap()).unwrap();
        assert!(max_abs_diff(&v, &fd) < 1e-6);
    }

    #[test]
    fn velocity_undefined_at_endpoints() {
        let s = Schedule::new(Family::RectifiedFlow);
        for t in [0.0, 1.0] {
            let obs = Observation::new(t, vec![1.0], vec![1.0]).unwrap();
            assert!(matches!(velocity_field(&s, &obs), Err(Error::SingularParameterization { .. })));
        }
    }
}
