//! Coefficient functions of the unified linear system
//!
//! ```text
//! [ X_t ]   [ a11(t)  a12(t) ] [ Z ]
//! [  ω  ] = [ a21(t)  a22(t) ] [ ε ]
//! ```
//!
//! for the five model families: the two DDPM parameterizations (noise and data
//! prediction), the EDM common framework, TrigFlow (native and unit-time
//! variants), and rectified flow.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Determinants with magnitude below this are treated as rank-deficient.
pub const SINGULAR_DET: f64 = 1e-12;

/// Default endpoint exclusion margin.
pub const DEFAULT_CLAMP_EPS: f64 = 1e-6;

/// Default EDM data standard deviation.
pub const DEFAULT_SIGMA_D: f64 = 0.5;

/// Default EDM terminal time.
pub const DEFAULT_EDM_TF: f64 = 80.0;

/// Number of grid points used by [`Schedule::check_derivative_relation`].
pub const DERIVATIVE_GRID: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// DDPM / latent diffusion, network predicts ε.
    DdpmNoisePred,
    /// DDPM variant where the network predicts Z.
    DdpmDataPred,
    /// EDM common framework and consistency models.
    EdmCommon,
    /// TrigFlow on [0, π/2].
    TrigFlow,
    /// TrigFlow rescaled to [0, 1].
    TrigFlowUnit,
    /// Rectified flow on [0, 1].
    RectifiedFlow,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::DdpmNoisePred,
        Family::DdpmDataPred,
        Family::EdmCommon,
        Family::TrigFlow,
        Family::TrigFlowUnit,
        Family::RectifiedFlow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::DdpmNoisePred => "ddpm_noise_pred",
            Family::DdpmDataPred => "ddpm_data_pred",
            Family::EdmCommon => "edm_common",
            Family::TrigFlow => "trig_flow",
            Family::TrigFlowUnit => "trig_flow_unit",
            Family::RectifiedFlow => "rectified_flow",
        }
    }

    pub fn is_ddpm(self) -> bool {
        matches!(self, Family::DdpmNoisePred | Family::DdpmDataPred)
    }

    /// Families whose target is the time derivative of the forward process.
    pub fn is_flow_matching(self) -> bool {
        matches!(
            self,
            Family::TrigFlow | Family::TrigFlowUnit | Family::RectifiedFlow
        )
    }

    pub fn is_variance_preserving(self) -> bool {
        !matches!(self, Family::RectifiedFlow)
    }

    /// Families whose determinant has constant magnitude one.
    pub fn has_unit_determinant(self) -> bool {
        matches!(
            self,
            Family::EdmCommon | Family::TrigFlow | Family::TrigFlowUnit | Family::RectifiedFlow
        )
    }

    /// Largest interval on which the coefficient formulas describe a valid
    /// forward process (`a11`, `a12` in [0, 1] and monotone).
    pub fn natural_range(self) -> (f64, f64) {
        match self {
            Family::EdmCommon => (0.0, f64::INFINITY),
            Family::TrigFlow => (0.0, FRAC_PI_2),
            _ => (0.0, 1.0),
        }
    }

    pub fn default_domain(self) -> TimeDomain {
        let tf = match self {
            Family::EdmCommon => DEFAULT_EDM_TF,
            Family::TrigFlow => FRAC_PI_2,
            _ => 1.0,
        };
        TimeDomain {
            t0: 0.0,
            tf,
            clamp_eps: DEFAULT_CLAMP_EPS,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Family::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family `{s}`")))
    }
}

/// Signal curve α_t (with σ_t = sqrt(1 - α_t²)) used by the DDPM families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaFn {
    /// α_t = cos(πt/2), σ_t = sin(πt/2) on [0, 1].
    #[default]
    Cosine,
}

impl AlphaFn {
    pub fn name(self) -> &'static str {
        match self {
            AlphaFn::Cosine => "cosine",
        }
    }

    /// (α_t, σ_t)
    pub fn eval(self, t: f64) -> (f64, f64) {
        match self {
            AlphaFn::Cosine => {
                let (s, c) = (FRAC_PI_2 * t).sin_cos();
                (c, s)
            }
        }
    }

    /// (dα/dt, dσ/dt)
    pub fn rates(self, t: f64) -> (f64, f64) {
        match self {
            AlphaFn::Cosine => {
                let (s, c) = (FRAC_PI_2 * t).sin_cos();
                (-FRAC_PI_2 * s, FRAC_PI_2 * c)
            }
        }
    }
}

impl FromStr for AlphaFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cosine" => Ok(AlphaFn::Cosine),
            _ => Err(Error::InvalidParameter(format!("unknown alpha_fn `{s}`"))),
        }
    }
}

/// Deliberate corruption of a schedule, used to check that the verification
/// suite detects broken coefficient tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Negate `a22`.
    FlipA22Sign,
}

impl FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flip_a22_sign" => Ok(Fault::FlipA22Sign),
            _ => Err(Error::InvalidParameter(format!("unknown fault `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomain {
    pub t0: f64,
    pub tf: f64,
    pub clamp_eps: f64,
}

impl TimeDomain {
    pub fn new(t0: f64, tf: f64, clamp_eps: f64) -> Result<Self> {
        if !(t0.is_finite() && tf.is_finite() && clamp_eps.is_finite()) {
            return Err(Error::InvalidDomain("bounds must be finite".into()));
        }
        if t0 >= tf {
            return Err(Error::InvalidDomain(format!("t0 = {t0} must be below tf = {tf}")));
        }
        if clamp_eps <= 0.0 {
            return Err(Error::InvalidDomain("clamp_eps must be positive".into()));
        }
        if t0 + clamp_eps >= tf - clamp_eps {
            return Err(Error::InvalidDomain(format!(
                "clamp_eps = {clamp_eps} leaves an empty clamped interval"
            )));
        }
        Ok(Self { t0, tf, clamp_eps })
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t0 && t <= self.tf
    }

    /// `[t0 + clamp_eps, tf - clamp_eps]`
    pub fn clamped(&self) -> (f64, f64) {
        (self.t0 + self.clamp_eps, self.tf - self.clamp_eps)
    }

    pub fn contains_clamped(&self, t: f64) -> bool {
        let (lo, hi) = self.clamped();
        t >= lo && t <= hi
    }

    /// `n` uniformly spaced points covering the clamped interval, endpoints included.
    pub fn clamped_grid(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.clamped();
        uniform_grid(lo, hi, n)
    }

    pub(crate) fn require(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                t,
                lo: self.t0,
                hi: self.tf,
            })
        }
    }

    pub(crate) fn require_clamped(&self, t: f64) -> Result<()> {
        if self.contains_clamped(t) {
            Ok(())
        } else {
            let (lo, hi) = self.clamped();
            Err(Error::OutOfDomain { t, lo, hi })
        }
    }
}

/// `n` points from `lo` to `hi` inclusive. A single point sits at `lo`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let last = (n - 1) as f64;
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * (i as f64 / last)
                    }
                })
                .collect()
        }
    }
}

/// A(t) evaluated at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffMatrix {
    pub t: f64,
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub det: f64,
}

impl CoeffMatrix {
    pub fn new(t: f64, a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self {
            t,
            a11,
            a12,
            a21,
            a22,
            det: a11 * a22 - a12 * a21,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.det.abs() < SINGULAR_DET
    }

    pub(crate) fn require_nonsingular(&self) -> Result<()> {
        if self.is_singular() {
            Err(Error::SingularParameterization {
                t: self.t,
                det: self.det,
            })
        } else {
            Ok(())
        }
    }
}

/// EDM network preconditioning coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdmPreconditioning {
    pub sigma_d: f64,
    pub t: f64,
    pub c_in: f64,
    pub c_out: f64,
    pub c_skip: f64,
    pub c_noise: f64,
}

impl EdmPreconditioning {
    pub fn new(sigma_d: f64, t: f64) -> Self {
        let norm2 = sigma_d * sigma_d + t * t;
        let root = norm2.sqrt();
        Self {
            sigma_d,
            t,
            c_in: 1.0 / root,
            c_out: sigma_d * t / root,
            c_skip: sigma_d * sigma_d / norm2,
            c_noise: t,
        }
    }

    /// Unit-variance (α_t, σ_t) obtained from `X_t = c_in Y_t`, `Z = Z̃/σ_d`,
    /// `ε = ε_t/t`.
    pub fn reparameterized(&self) -> (f64, f64) {
        (self.c_in * self.sigma_d, self.c_in * self.t)
    }

    /// Network target `(Z̃ - c_skip Y_t) / c_out` in the original EDM scale.
    pub fn target(&self, z_tilde: f64, y: f64) -> f64 {
        (z_tilde - self.c_skip * y) / self.c_out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub family: Family,
    /// Only read by [`Family::EdmCommon`].
    pub sigma_d: f64,
    /// Only read by the DDPM families.
    pub alpha_fn: AlphaFn,
    pub domain: TimeDomain,
    pub fault: Option<Fault>,
}

impl Schedule {
    /// Schedule with the family's default parameters and domain.
    pub fn new(family: Family) -> Self {
        Self {
            family,
            sigma_d: DEFAULT_SIGMA_D,
            alpha_fn: AlphaFn::Cosine,
            domain: family.default_domain(),
            fault: None,
        }
    }

    pub fn edm(sigma_d: f64) -> Result<Self> {
        Schedule::new(Family::EdmCommon).with_sigma_d(sigma_d)
    }

    pub fn with_sigma_d(mut self, sigma_d: f64) -> Result<Self> {
        if !(sigma_d.is_finite() && sigma_d > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_d must be positive, got {sigma_d}"
            )));
        }
        self.sigma_d = sigma_d;
        Ok(self)
    }

    pub fn with_alpha_fn(mut self, alpha_fn: AlphaFn) -> Self {
        self.alpha_fn = alpha_fn;
        self
    }

    pub fn with_domain(mut self, domain: TimeDomain) -> Result<Self> {
        let (lo, hi) = self.family.natural_range();
        let slack = 1e-12;
        if domain.t0 < lo - slack || domain.tf > hi + slack {
            return Err(Error::InvalidDomain(format!(
                "[{}, {}] exceeds the valid range [{lo}, {hi}] of {}",
                domain.t0, domain.tf, self.family
            )));
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn with_fault(mut self, fault: Fault) -> Self {
        self.fault = Some(fault);
        self
    }

    pub fn coefficients(&self, t: f64) -> Result<CoeffMatrix> {
        self.domain.require(t)?;
        Ok(self.eval(t))
    }

    /// Analytic time derivatives `(ȧ11, ȧ12)`.
    pub fn rates(&self, t: f64) -> Result<(f64, f64)> {
        self.domain.require(t)?;
        Ok(self.eval_rates(t))
    }

    /// Factor `s` such that a flow-matching target satisfies `ȧ1j = s · a2j`.
    ///
    /// TrigFlowUnit keeps the native TrigFlow target while running on a unit
    /// clock `t = 2τ/π`, so its target is the velocity in τ and `s = π/2`.
    pub fn target_clock_rate(&self) -> f64 {
        match self.family {
            Family::TrigFlowUnit => FRAC_PI_2,
            _ => 1.0,
        }
    }

    /// Noise conditioning passed to the network; recorded for completeness.
    pub fn c_noise(&self, t: f64) -> f64 {
        t
    }

    pub fn edm_preconditioning(&self, t: f64) -> Option<EdmPreconditioning> {
        (self.family == Family::EdmCommon).then(|| EdmPreconditioning::new(self.sigma_d, t))
    }

    /// Coefficient formulas without the domain check.
    pub(crate) fn eval(&self, t: f64) -> CoeffMatrix {
        let (a11, a12, a21, mut a22) = match self.family {
            Family::DdpmNoisePred => {
                let (alpha, sigma) = self.alpha_fn.eval(t);
                (alpha, sigma, 0.0, 1.0)
            }
            Family::DdpmDataPred => {
                let (alpha, sigma) = self.alpha_fn.eval(t);
                (alpha, sigma, 1.0, 0.0)
            }
            Family::EdmCommon => {
                let root = (self.sigma_d * self.sigma_d + t * t).sqrt();
                let (alpha, sigma) = (self.sigma_d / root, t / root);
                (alpha, sigma, sigma, -alpha)
            }
            Family::TrigFlow => {
                let (s, c) = t.sin_cos();
                (c, s, -s, c)
            }
            Family::TrigFlowUnit => {
                let (s, c) = (FRAC_PI_2 * t).sin_cos();
                (c, s, -s, c)
            }
            Family::RectifiedFlow => (1.0 - t, t, -1.0, 1.0),
        };
        if self.fault == Some(Fault::FlipA22Sign) {
            a22 = -a22;
        }
        CoeffMatrix::new(t, a11, a12, a21, a22)
    }

    pub(crate) fn eval_rates(&self, t: f64) -> (f64, f64) {
        match self.family {
            Family::DdpmNoisePred | Family::DdpmDataPred => self.alpha_fn.rates(t),
            Family::EdmCommon => {
                let sd = self.sigma_d;
                let norm2 = sd * sd + t * t;
                let cube = norm2 * norm2.sqrt();
                (-sd * t / cube, sd * sd / cube)
            }
            Family::TrigFlow => {
                let (s, c) = t.sin_cos();
                (-s, c)
            }
            Family::TrigFlowUnit => {
                let (s, c) = (FRAC_PI_2 * t).sin_cos();
                (-FRAC_PI_2 * s, FRAC_PI_2 * c)
            }
            Family::RectifiedFlow => (-1.0, 1.0),
        }
    }

    /// Checks `a11 → 1, a12 → 0` at `t0` and `a11 → 0, a12 → 1` at `tf`.
    ///
    /// The coefficient functions are continuous up to the endpoints, so the
    /// limits are evaluated there directly.
    pub fn check_limits(&self, tol: f64) -> LimitReport {
        let start = self.eval(self.domain.t0);
        let end = self.eval(self.domain.tf);
        let entry = |name, value: f64, expected: f64| LimitResidual {
            name,
            value,
            expected,
            residual: (value - expected).abs(),
        };
        LimitReport {
            tol,
            residuals: [
                entry("a11(t0) = 1", start.a11, 1.0),
                entry("a11(tf) = 0", end.a11, 0.0),
                entry("a12(t0) = 0", start.a12, 0.0),
                entry("a12(tf) = 1", end.a12, 1.0),
            ],
        }
    }

    /// Central finite-difference check of `ȧ11 = s·a21`, `ȧ12 = s·a22` for
    /// the flow-matching families, where `s` is [`Self::target_clock_rate`].
    pub fn check_derivative_relation(&self, h: f64, tol: f64) -> Result<DerivativeReport> {
        if !self.family.is_flow_matching() {
            return Err(Error::NotFlowMatching(self.family));
        }
        if h.is_nan() || h <= 0.0 {
            return Err(Error::InvalidParameter(format!("step h must be positive, got {h}")));
        }
        let inset = h.max(self.domain.clamp_eps);
        let lo = self.domain.t0 + inset;
        let hi = self.domain.tf - inset;
        if lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "step h = {h} too large for the domain"
            )));
        }
        let scale = self.target_clock_rate();
        let mut max_err_a11: f64 = 0.0;
        let mut max_err_a12: f64 = 0.0;
        let grid = uniform_grid(lo, hi, DERIVATIVE_GRID);
        for &t in &grid {
            let fwd = self.eval(t + h);
            let bwd = self.eval(t - h);
            let here = self.eval(t);
            let d11 = (fwd.a11 - bwd.a11) / (2.0 * h);
            let d12 = (fwd.a12 - bwd.a12) / (2.0 * h);
            max_err_a11 = max_err_a11.max((d11 - scale * here.a21).abs());
            max_err_a12 = max_err_a12.max((d12 - scale * here.a22).abs());
        }
        Ok(DerivativeReport {
            h,
            tol,
            points: grid.len(),
            max_err_a11,
            max_err_a12,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitResidual {
    pub name: &'static str,
    pub value: f64,
    pub expected: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub tol: f64,
    pub residuals: [LimitResidual; 4],
}

impl LimitReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|r| r.residual < self.tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeReport {
    pub h: f64,
    pub tol: f64,
    pub points: usize,
    pub max_err_a11: f64,
    pub max_err_a12: f64,
}

impl DerivativeReport {
    pub fn max_error(&self) -> f64 {
        self.max_err_a11.max(self.max_err_a12)
    }

    pub fn passed(&self) -> bool {
        self.max_error() < self.tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn trigflow_at_start_is_identity() {
        let a = Schedule::new(Family::TrigFlow).coefficients(0.0).unwrap();
        assert_eq!((a.a11, a.a12, a.a21, a.a22, a.det), (1.0, 0.0, -0.0, 1.0, 1.0));
    }

    #[test]
    fn rectified_flow_midpoint() {
        let a = Schedule::new(Family::RectifiedFlow).coefficients(0.5).unwrap();
        assert_eq!((a.a11, a.a12, a.a21, a.a22, a.det), (0.5, 0.5, -1.0, 1.0, 1.0));
    }

    #[test]
    fn edm_half() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let a = Schedule::edm(0.5).unwrap().coefficients(0.5).unwrap();
        assert_abs_diff_eq!(a.a11, r, epsilon = 1e-15);
        assert_abs_diff_eq!(a.a12, r, epsilon = 1e-15);
        assert_abs_diff_eq!(a.a21, r, epsilon = 1e-15);
        assert_abs_diff_eq!(a.a22, -r, epsilon = 1e-15);
        assert_abs_diff_eq!(a.det, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn coefficients_reject_out_of_domain() {
        let s = Schedule::new(Family::RectifiedFlow);
        assert!(matches!(s.coefficients(1.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(s.coefficients(-0.1), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn limits() {
        let unit = Schedule::new(Family::TrigFlowUnit).check_limits(1e-9);
        assert!(unit.passed(), "{unit:?}");
        assert!(unit.max_residual() < 1e-9);
        assert!(Schedule::new(Family::DdpmNoisePred).check_limits(1e-9).passed());

        let edm = Schedule::edm(0.5).unwrap().check_limits(1e-2);
        assert!(edm.passed());
        // 1 - 80/sqrt(6400.25), 40-digit reference
        let a12_tf = edm.residuals.iter().find(|r| r.name == "a12(tf) = 1").unwrap();
        assert_abs_diff_eq!(a12_tf.residual, 1.953_067_781_403_597e-5, epsilon = 1e-15);
        // a11(80) = 0.5/sqrt(6400.25) ≈ 6.25e-3 is why the EDM tolerance is loose
        assert!(!Schedule::edm(0.5).unwrap().check_limits(1e-3).passed());
    }

    #[test]
    fn derivative_relation() {
        for family in [Family::RectifiedFlow, Family::TrigFlow, Family::TrigFlowUnit] {
            let report = Schedule::new(family)
                .check_derivative_relation(1e-5, 1e-8)
                .unwrap();
            assert!(report.passed(), "{family}: {report:?}");
        }
        assert_eq!(
            Schedule::new(Family::DdpmNoisePred).check_derivative_relation(1e-5, 1e-8),
            Err(Error::NotFlowMatching(Family::DdpmNoisePred))
        );
    }

    #[test]
    fn flipped_target_breaks_derivative_relation() {
        let s = Schedule::new(Family::TrigFlow).with_fault(Fault::FlipA22Sign);
        assert!(!s.check_derivative_relation(1e-5, 1e-8).unwrap().passed());
    }

    #[test]
    fn domain_validation() {
        assert!(TimeDomain::new(1.0, 0.0, 1e-6).is_err());
        assert!(TimeDomain::new(0.0, 1.0, 0.0).is_err());
        assert!(TimeDomain::new(0.0, 1.0, 0.5).is_err());
        let d = TimeDomain::new(0.0, 2.0, 1e-6).unwrap();
        assert!(Schedule::new(Family::RectifiedFlow).with_domain(d).is_err());
        assert!(Schedule::new(Family::EdmCommon).with_domain(d).is_ok());
        assert!(Schedule::edm(0.0).is_err());
    }

    #[test]
    fn grid_shape() {
        let d = Family::RectifiedFlow.default_domain();
        assert!(d.clamped_grid(0).is_empty());
        let g = d.clamped_grid(101);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 1e-6);
        assert_eq!(g[100], 1.0 - 1e-6);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("ddim".parse::<Family>().is_err());
    }

    #[test]
    fn unit_trigflow_rescales_native() {
        let unit = Schedule::new(Family::TrigFlowUnit);
        let native = Schedule::new(Family::TrigFlow);
        for t in unit.domain.clamped_grid(57) {
            let a = unit.coefficients(t).unwrap();
            let b = native.coefficients(FRAC_PI_2 * t).unwrap();
            assert_abs_diff_eq!(a.a11, b.a11, epsilon = 1e-15);
            assert_abs_diff_eq!(a.a12, b.a12, epsilon = 1e-15);
            assert_abs_diff_eq!(a.a21, b.a21, epsilon = 1e-15);
            assert_abs_diff_eq!(a.a22, b.a22, epsilon = 1e-15);
        }
    }
}
