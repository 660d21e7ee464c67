use thiserror::Error;

use crate::schedules::Family;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time {t} is outside the domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("{0} is not a flow-matching family")]
    NotFlowMatching(Family),

    #[error("{0} is not a DDPM family")]
    NotDdpm(Family),

    #[error("target coefficients vanish at t = {t}")]
    DegenerateTarget { t: f64 },

    #[error("singular parameterization at t = {t} (|A| = {det:e})")]
    SingularParameterization { t: f64, det: f64 },

    #[error("reverse step requires t' < t (t = {t}, t' = {t_prime})")]
    TimeOrder { t: f64, t_prime: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid time domain: {0}")]
    InvalidDomain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid data distribution: {0}")]
    InvalidDistribution(String),
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
