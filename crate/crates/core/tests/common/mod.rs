//! Hand-written closed forms used as independent oracles. Nothing here calls
//! the library's own coefficient code.

#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use diffcorr::Family;

pub const SIGMA_D: f64 = 0.5;

/// (a11, a12, a21, a22) written out per family.
pub fn coeffs(family: Family, t: f64) -> [f64; 4] {
    let (al, sg) = ((FRAC_PI_2 * t).cos(), (FRAC_PI_2 * t).sin());
    match family {
        Family::DdpmNoisePred => [al, sg, 0.0, 1.0],
        Family::DdpmDataPred => [al, sg, 1.0, 0.0],
        Family::EdmCommon => {
            let n = (SIGMA_D * SIGMA_D + t * t).sqrt();
            [SIGMA_D / n, t / n, t / n, -SIGMA_D / n]
        }
        Family::TrigFlow => [t.cos(), t.sin(), -t.sin(), t.cos()],
        Family::TrigFlowUnit => [al, sg, -sg, al],
        Family::RectifiedFlow => [1.0 - t, t, -1.0, 1.0],
    }
}

pub fn det(family: Family, t: f64) -> f64 {
    match family {
        Family::DdpmNoisePred => (FRAC_PI_2 * t).cos(),
        Family::DdpmDataPred => -(FRAC_PI_2 * t).sin(),
        Family::EdmCommon => -1.0,
        Family::TrigFlow | Family::TrigFlowUnit | Family::RectifiedFlow => 1.0,
    }
}

pub fn psi(family: Family, t: f64) -> f64 {
    match family {
        Family::DdpmNoisePred => (FRAC_PI_2 * t).sin(),
        Family::DdpmDataPred => (FRAC_PI_2 * t).cos(),
        Family::EdmCommon | Family::TrigFlow | Family::TrigFlowUnit => 0.0,
        Family::RectifiedFlow => (2.0 * t - 1.0) / (((1.0 - t).powi(2) + t * t).sqrt() * 2f64.sqrt()),
    }
}

/// |Φ(t, t′)| for t′ ≤ t.
pub fn phi(family: Family, t: f64, tp: f64) -> f64 {
    let jump = (FRAC_PI_2 * (t - tp)).sin();
    match family {
        Family::DdpmNoisePred => jump / (FRAC_PI_2 * t).cos(),
        Family::DdpmDataPred => jump / (FRAC_PI_2 * t).sin(),
        Family::EdmCommon => {
            let n = |u: f64| (SIGMA_D * SIGMA_D + u * u).sqrt();
            SIGMA_D * (t - tp) / (n(t) * n(tp))
        }
        Family::TrigFlow => (t - tp).sin(),
        Family::TrigFlowUnit => jump,
        Family::RectifiedFlow => t - tp,
    }
}

/// |Φ(t, 0)|.
pub fn phi_to_zero(family: Family, t: f64) -> f64 {
    match family {
        Family::DdpmNoisePred => (FRAC_PI_2 * t).tan(),
        Family::DdpmDataPred => 1.0,
        Family::EdmCommon => t / (SIGMA_D * SIGMA_D + t * t).sqrt(),
        Family::TrigFlow => t.sin(),
        Family::TrigFlowUnit => (FRAC_PI_2 * t).sin(),
        Family::RectifiedFlow => t,
    }
}

/// Var(X_t) for unit-variance data.
pub fn variance(family: Family, t: f64) -> f64 {
    match family {
        Family::RectifiedFlow => (1.0 - t).powi(2) + t * t,
        _ => 1.0,
    }
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}
