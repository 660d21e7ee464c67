//! Analytic diagnostics of a schedule: determinant, Pearson correlation between
//! the noisy state and the network target, the error-amplification factor of
//! the unified reverse step, and the log-SNR.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::schedules::{CoeffMatrix, Schedule};

/// Pearson correlation Ψ(t) between `X_t` and the target `ω`, for independent
/// unit-variance `Z` and `ε`.
pub fn pearson(schedule: &Schedule, t: f64) -> Result<f64> {
    let a = schedule.coefficients(t)?;
    pearson_of(&a)
}

fn pearson_of(a: &CoeffMatrix) -> Result<f64> {
    if a.a21 == 0.0 && a.a22 == 0.0 {
        return Err(Error::DegenerateTarget { t: a.t });
    }
    let cov = a.a11 * a.a21 + a.a12 * a.a22;
    let sd_x = (a.a11 * a.a11 + a.a12 * a.a12).sqrt();
    let sd_w = (a.a21 * a.a21 + a.a22 * a.a22).sqrt();
    Ok(cov / (sd_x * sd_w))
}

/// Signed amplification Φ(t, t′) of a fitting error in `f_θ(X_t, t)` into
/// the reconstructed `X_{t′}`.
///
/// Only `A(t)` has to be invertible; `t′` may sit anywhere in `[t0, t]`.
pub fn amplification(schedule: &Schedule, t: f64, t_prime: f64) -> Result<f64> {
    let a = schedule.coefficients(t)?;
    let b = schedule.coefficients(t_prime)?;
    if t_prime > t {
        return Err(Error::TimeOrder { t, t_prime });
    }
    a.require_nonsingular()?;
    Ok(amplification_of(&a, &b))
}

pub(crate) fn amplification_of(a: &CoeffMatrix, b: &CoeffMatrix) -> f64 {
    (a.a11 * b.a12 - b.a11 * a.a12) / a.det
}

/// |Φ(t, t0)| = |a12(t) / |A(t)||, the error gain of a one-step consistency jump.
pub fn amplification_to_zero(schedule: &Schedule, t: f64) -> Result<f64> {
    let a = schedule.coefficients(t)?;
    a.require_nonsingular()?;
    let gain = (a.a12 / a.det).abs();
    debug_assert!({
        let start = schedule.eval(schedule.domain.t0);
        let full = amplification_of(&a, &start).abs();
        (full - gain).abs() <= 1e-12 * gain.max(1.0)
    });
    Ok(gain)
}

/// Log signal-to-noise ratio and its analytic time derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snr {
    pub lambda: f64,
    pub lambda_dot: f64,
}

pub fn snr(schedule: &Schedule, t: f64) -> Result<Snr> {
    let a = schedule.coefficients(t)?;
    if !(a.a11 > 0.0 && a.a12 > 0.0) {
        return Err(Error::SingularParameterization { t, det: a.det });
    }
    let (d11, d12) = schedule.eval_rates(t);
    Ok(Snr {
        lambda: 2.0 * (a.a11 / a.a12).ln(),
        lambda_dot: 2.0 * (d11 / a.a11 - d12 / a.a12),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisRow {
    pub t: f64,
    pub coeffs: CoeffMatrix,
    pub det: f64,
    pub psi: f64,
    pub lambda: f64,
    pub lambda_dot: f64,
    /// |Φ(t, t_ref)|, `+inf` where A(t) is singular.
    pub phi_to_ref: f64,
}

/// One row per grid point. Points that cannot be evaluated yield a row-level
/// error; a singular A(t) is not an error but an infinite `phi_to_ref`.
pub fn table_rows(schedule: &Schedule, t_grid: &[f64], t_ref: f64) -> Vec<Result<AnalysisRow>> {
    t_grid
        .par_iter()
        .map(|&t| analysis_row(schedule, t, t_ref))
        .collect()
}

fn analysis_row(schedule: &Schedule, t: f64, t_ref: f64) -> Result<AnalysisRow> {
    schedule.domain.require_clamped(t)?;
    let coeffs = schedule.eval(t);
    let psi = pearson_of(&coeffs)?;
    let Snr { lambda, lambda_dot } = snr(schedule, t)?;
    let phi_to_ref = match amplification(schedule, t, t_ref) {
        Ok(phi) => phi.abs(),
        Err(Error::SingularParameterization { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(AnalysisRow {
        t,
        coeffs,
        det: coeffs.det,
        psi,
        lambda,
        lambda_dot,
        phi_to_ref,
    })
}

/// Per-family closed forms of the determinant, correlation and amplification
/// columns, written directly in terms of α_t and σ_t rather than through the
/// general 2×2 expressions. Used by the verification suite.
pub mod closed_form {
    use crate::schedules::{Family, Schedule};
    use std::f64::consts::FRAC_PI_2;

    fn signal_noise(schedule: &Schedule, t: f64) -> (f64, f64) {
        match schedule.family {
            Family::DdpmNoisePred | Family::DdpmDataPred => schedule.alpha_fn.eval(t),
            Family::EdmCommon => {
                let sd = schedule.sigma_d;
                let root = (sd * sd + t * t).sqrt();
                (sd / root, t / root)
            }
            Family::TrigFlow => (t.cos(), t.sin()),
            Family::TrigFlowUnit => ((FRAC_PI_2 * t).cos(), (FRAC_PI_2 * t).sin()),
            Family::RectifiedFlow => (1.0 - t, t),
        }
    }

    pub fn det(schedule: &Schedule, t: f64) -> f64 {
        let (alpha, sigma) = signal_noise(schedule, t);
        match schedule.family {
            Family::DdpmNoisePred => alpha,
            Family::DdpmDataPred => -sigma,
            Family::EdmCommon => -1.0,
            Family::TrigFlow | Family::TrigFlowUnit | Family::RectifiedFlow => 1.0,
        }
    }

    pub fn psi(schedule: &Schedule, t: f64) -> f64 {
        let (alpha, sigma) = signal_noise(schedule, t);
        match schedule.family {
            Family::DdpmNoisePred => sigma,
            Family::DdpmDataPred => alpha,
            Family::EdmCommon | Family::TrigFlow | Family::TrigFlowUnit => 0.0,
            Family::RectifiedFlow => (2.0 * t - 1.0) / (2.0 * ((t - 1.0).powi(2) + t * t)).sqrt(),
        }
    }

    /// |Φ(t, t′)|
    pub fn phi(schedule: &Schedule, t: f64, t_prime: f64) -> f64 {
        let (alpha, sigma) = signal_noise(schedule, t);
        let (alpha_p, sigma_p) = signal_noise(schedule, t_prime);
        match schedule.family {
            Family::DdpmNoisePred => (sigma_p * alpha - sigma * alpha_p).abs() / alpha,
            Family::DdpmDataPred => (sigma_p * alpha - sigma * alpha_p).abs() / sigma,
            Family::EdmCommon => {
                let sd = schedule.sigma_d;
                sd * (t - t_prime) / ((sd * sd + t * t).sqrt() * (sd * sd + t_prime * t_prime).sqrt())
            }
            Family::TrigFlow => (t - t_prime).sin(),
            Family::TrigFlowUnit => (FRAC_PI_2 * (t - t_prime)).sin(),
            Family::RectifiedFlow => t - t_prime,
        }
    }

    /// |Φ(t, 0)|
    pub fn phi_to_zero(schedule: &Schedule, t: f64) -> f64 {
        let (alpha, sigma) = signal_noise(schedule, t);
        match schedule.family {
            Family::DdpmNoisePred => sigma / alpha,
            Family::DdpmDataPred => 1.0,
            Family::EdmCommon => t / (schedule.sigma_d.powi(2) + t * t).sqrt(),
            Family::TrigFlow => t.sin(),
            Family::TrigFlowUnit => (FRAC_PI_2 * t).sin(),
            Family::RectifiedFlow => t,
        }
    }
}
