//! The invariant suite run by `diffcorr verify`: endpoint limits, variance
//! preservation, monotone log-SNR, the closed-form table columns, derivative
//! relations, inversion round trips, exact-oracle reconstruction, empirical
//! amplification, and Monte Carlo agreement.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::analysis::{amplification, amplification_to_zero, closed_form, pearson, snr};
use crate::conversions::{invert, velocity_field, Observation, StatePair};
use crate::dynamics::{
    ddpm_stochastic_step, forward, measure_amplification, reverse_trajectory, OraclePredictor,
    VarianceMode,
};
use crate::empirical::{estimate_pearson, estimate_variance, DataDistribution};
use crate::error::Result;
use crate::output::{csv_io, csv_writer, fmt_real};
use crate::schedules::{Family, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// measured < tolerance
    Below,
    /// measured > tolerance
    Above,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub family: Family,
    pub measured: f64,
    pub tolerance: f64,
    pub bound: Bound,
}

impl Check {
    fn below(name: &'static str, family: Family, measured: f64, tolerance: f64) -> Self {
        Self { name, family, measured, tolerance, bound: Bound::Below }
    }

    fn above(name: &'static str, family: Family, measured: f64, tolerance: f64) -> Self {
        Self { name, family, measured, tolerance, bound: Bound::Above }
    }

    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::Below => self.measured < self.tolerance,
            Bound::Above => self.measured > self.tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    /// Columns `check,family,measured,relation,tolerance,status`.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["check", "family", "measured", "relation", "tolerance", "status"])
            .map_err(csv_io)?;
        for c in &self.checks {
            let rel = match c.bound {
                Bound::Below => "<",
                Bound::Above => ">",
            };
            let status = if c.passed() { "pass" } else { "fail" };
            w.write_record([
                c.name,
                c.family.name(),
                &fmt_real(c.measured),
                rel,
                &fmt_real(c.tolerance),
                status,
            ])
            .map_err(csv_io)?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub grid_points: usize,
    pub mc_n: usize,
    pub seed: u64,
    pub dist: DataDistribution,
}

/// Failed evaluations count as failed checks (NaN never passes).
fn or_nan(r: Result<f64>) -> f64 {
    r.unwrap_or(f64::NAN)
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

fn rel_err(a: &[f64], b: &[f64], scale: f64) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    num / scale
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normal_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn run_suite(schedules: &[Schedule], settings: &VerifySettings) -> VerifyReport {
    let mut report = VerifyReport::default();
    for s in schedules {
        report.checks.extend(schedule_checks(s, settings));
    }
    report
}

pub fn schedule_checks(s: &Schedule, settings: &VerifySettings) -> Vec<Check> {
    let fam = s.family;
    let mut checks = Vec::new();
    let grid = s.domain.clamped_grid(settings.grid_points);
    let fine = s.domain.clamped_grid(1000);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let (lo, hi) = s.domain.clamped();

    // EDM never reaches a11 = 0 at finite tf: a11(80) ≈ 6.25e-3 for σ_d = 0.5
    let limit_tol = if fam == Family::EdmCommon { 1e-2 } else { 1e-9 };
    checks.push(Check::below("endpoint_limits", fam, s.check_limits(limit_tol).max_residual(), limit_tol));

    let vp_residual = fine.iter().map(|&t| {
        let a = s.eval(t);
        (a.a11 * a.a11 + a.a12 * a.a12 - 1.0).abs()
    });
    if fam.is_variance_preserving() {
        checks.push(Check::below("variance_preserving", fam, max_of(vp_residual), 1e-12));
    } else {
        let min = vp_residual.fold(f64::INFINITY, f64::min);
        checks.push(Check::above("not_variance_preserving", fam, min, 1e-9));
    }

    let lambdas: Vec<f64> = fine.iter().map(|&t| snr(s, t).map(|r| r.lambda).unwrap_or(f64::NAN)).collect();
    // NaN propagates so a failed λ evaluation fails the check
    let rise = lambdas
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, |m, d| if d.is_nan() || m.is_nan() { f64::NAN } else { m.max(d) });
    checks.push(Check::below("monotone_log_snr", fam, rise, 0.0));

    if fam.has_unit_determinant() {
        let dev = max_of(fine.iter().map(|&t| (s.eval(t).det.abs() - 1.0).abs()));
        checks.push(Check::below("unit_determinant", fam, dev, 1e-12));
    }
    if matches!(fam, Family::EdmCommon | Family::TrigFlow | Family::TrigFlowUnit) {
        let psi = max_of(fine.iter().map(|&t| or_nan(pearson(s, t)).abs()));
        checks.push(Check::below("zero_correlation", fam, psi, 1e-12));
    }

    let det_dev = max_of(grid.iter().map(|&t| (s.eval(t).det - closed_form::det(s, t)).abs()));
    checks.push(Check::below("table_det", fam, det_dev, 1e-12));
    let psi_dev = max_of(grid.iter().map(|&t| (or_nan(pearson(s, t)) - closed_form::psi(s, t)).abs()));
    checks.push(Check::below("table_psi", fam, psi_dev, 1e-12));
    let phi_dev = max_of(grid.iter().enumerate().flat_map(|(i, &t)| {
        grid[..i]
            .iter()
            .map(move |&tp| (or_nan(amplification(s, t, tp)).abs() - closed_form::phi(s, t, tp)).abs())
    }));
    checks.push(Check::below("table_phi", fam, phi_dev, 1e-12));
    let phi0_dev = max_of(grid.iter().map(|&t| (or_nan(amplification_to_zero(s, t)) - closed_form::phi_to_zero(s, t)).abs()));
    checks.push(Check::below("table_phi_to_zero", fam, phi0_dev, 1e-12));

    let probe = StatePair::new(vec![0.7, -1.2, 0.3], vec![-0.4, 0.9, 1.6]).expect("fixed probe");
    if fam.is_flow_matching() {
        let fd = s.check_derivative_relation(1e-5, 1e-6).map(|r| r.max_error());
        checks.push(Check::below("derivative_relation", fam, or_nan(fd), 1e-6));
        let rate = s.target_clock_rate();
        let dev = max_of(grid.iter().map(|&t| {
            let obs = Observation::encode(s, t, &probe).expect("grid in domain");
            match velocity_field(s, &obs) {
                Ok(v) => v.iter().zip(&obs.f).map(|(v, f)| (v - rate * f).abs()).fold(0.0, f64::max),
                Err(_) => f64::NAN,
            }
        }));
        checks.push(Check::below("velocity_equals_target", fam, dev, 1e-12));
    } else {
        let h = 1e-5;
        let inner = crate::schedules::uniform_grid(lo + h, hi - h, settings.grid_points.max(2));
        let dev = max_of(inner.iter().map(|&t| {
            let x = |t| forward(s, &probe.z, &probe.eps, t).expect("inset grid");
            let obs = Observation::encode(s, t, &probe).expect("inset grid");
            match velocity_field(s, &obs) {
                Ok(v) => v
                    .iter()
                    .zip(x(t + h).iter().zip(x(t - h)))
                    .map(|(v, (p, m))| ((p - m) / (2.0 * h) - v).abs() / v.abs().max(1.0))
                    .fold(0.0, f64::max),
                Err(_) => f64::NAN,
            }
        }));
        checks.push(Check::below("velocity_matches_forward_rate", fam, dev, 1e-6));
    }

    let round_trip = max_of((0..1000).map(|_| {
        let dim = rng.random_range(1..=64);
        let st = StatePair::new(normal_vec(&mut rng, dim), normal_vec(&mut rng, dim)).expect("dim >= 1");
        let t = rng.random_range(lo..=hi);
        let obs = Observation::encode(s, t, &st).expect("clamped t");
        match invert(s, &obs) {
            Ok(back) => {
                let scale = norm(&st.z).hypot(norm(&st.eps));
                rel_err(&back.z, &st.z, scale).max(rel_err(&back.eps, &st.eps, scale))
            }
            Err(_) => f64::NAN,
        }
    }));
    checks.push(Check::below("inversion_round_trip", fam, round_trip, 1e-10));

    let z = normal_vec(&mut rng, 8);
    let oracle = OraclePredictor::new(z.clone(), normal_vec(&mut rng, 8)).expect("dim 8");
    let recon = max_of([1, 10, 1000].into_iter().map(|n| match reverse_trajectory(s, &oracle, n, None) {
        Ok(tr) => rel_err(tr.final_state(), &z, norm(&z)),
        Err(_) => f64::NAN,
    }));
    checks.push(Check::below("exact_oracle_reconstruction", fam, recon, 1e-8));

    let phi_gap = max_of((0..100).map(|_| {
        let a = rng.random_range(lo..=hi);
        let b = rng.random_range(lo..=hi);
        let (t, tp) = if a >= b { (a, b) } else { (b, a) };
        let analytic = or_nan(amplification(s, t, tp)).abs();
        let empirical = or_nan(measure_amplification(s, t, tp, 1.0));
        (analytic - empirical).abs() / analytic.max(1.0)
    }));
    checks.push(Check::below("empirical_amplification", fam, phi_gap, 1e-9));

    let mc_points = [0.25, 0.5, 0.75].map(|q| lo + q * (hi - lo));
    let z_score = max_of(mc_points.iter().map(|&t| {
        match (estimate_pearson(s, &settings.dist, t, settings.mc_n, settings.seed), pearson(s, t)) {
            (Ok(est), Ok(psi)) => (est.value - psi).abs() / est.std_error,
            _ => f64::NAN,
        }
    }));
    checks.push(Check::below("mc_pearson_sigma", fam, z_score, 4.0));

    let t_mid = lo + 0.5 * (hi - lo);
    let a = s.eval(t_mid);
    let expected = a.a11 * a.a11 * settings.dist.variance() + a.a12 * a.a12;
    let var_score = match estimate_variance(s, &settings.dist, t_mid, settings.mc_n, settings.seed) {
        Ok(ests) => max_of(ests.iter().map(|e| (e.value - expected).abs() / e.std_error)),
        Err(_) => f64::NAN,
    };
    checks.push(Check::below("mc_variance_sigma", fam, var_score, 5.0));

    if fam.is_ddpm() {
        let seeds = 100_000u64;
        let worst = max_of([(0.6, 0.5), (0.9, 0.3)].into_iter().map(|(qt, qp)| {
            let (t, tp) = (lo + qt * (hi - lo), lo + qp * (hi - lo));
            let obs = Observation::encode(s, t, &StatePair::new(vec![0.3], vec![-0.8]).expect("dim 1"))
                .expect("clamped t");
            let mut target = f64::NAN;
            let xs: Vec<f64> = (0..seeds)
                .filter_map(|k| {
                    ddpm_stochastic_step(s, &obs, tp, VarianceMode::DdpmPosterior, settings.seed.wrapping_add(k))
                        .ok()
                        .map(|step| {
                            target = step.variance;
                            step.x[0]
                        })
                })
                .collect();
            if xs.len() as u64 != seeds {
                return f64::NAN;
            }
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / target - 1.0).abs()
        }));
        checks.push(Check::below("ddpm_posterior_variance", fam, worst, 0.02));
    }

    checks
}
