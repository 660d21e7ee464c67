//! Run configuration.
//!
//! The config file is sectioned `key = value` text (TOML). Every key can be
//! overridden on the command line by a flag of the same dotted name, e.g.
//! `--schedule.sigma_d 0.7`. Unknown keys are rejected.
//!
//! ```toml
//! [schedule]
//! family = "all"            # "all" or comma-separated family names
//! sigma_d = 0.5             # edm_common only
//! t0 = 0.0                  # optional, defaults per family
//! tf = 80.0                 # optional, defaults per family
//! clamp_eps = 1e-6
//! alpha_fn = "cosine"       # ddpm families only
//! # fault = "flip_a22_sign" # deliberately corrupt the target row
//!
//! [grid]
//! n_points = 101
//! # t_ref = 0.0             # optional, defaults to each family's t0
//!
//! [mc]
//! n = 1000000
//! seed = 0
//! distribution = "standard_normal"   # or "gaussian_mixture"
//! dim = 1
//! curve_points = 21
//!
//! [sample]
//! n_steps = 10
//! dim = 4
//! delta = 0.0
//! # delta_time = 0.5
//!
//! [output]
//! path = "out"
//! format = "csv"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use thiserror::Error;

use crate::empirical::{DataDistribution, DEFAULT_MC_N, MIN_MC_N};
use crate::schedules::{AlphaFn, Family, Fault, Schedule, TimeDomain, DEFAULT_CLAMP_EPS, DEFAULT_SIGMA_D};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl From<crate::Error> for ConfigError {
    fn from(e: crate::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schedule: ScheduleSection,
    pub grid: GridSection,
    pub mc: McSection,
    pub sample: SampleSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub family: String,
    pub sigma_d: f64,
    pub t0: Option<f64>,
    pub tf: Option<f64>,
    pub clamp_eps: f64,
    pub alpha_fn: String,
    pub fault: Option<String>,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            family: "all".into(),
            sigma_d: DEFAULT_SIGMA_D,
            t0: None,
            tf: None,
            clamp_eps: DEFAULT_CLAMP_EPS,
            alpha_fn: "cosine".into(),
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n_points: usize,
    pub t_ref: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n_points: 101,
            t_ref: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub n: usize,
    pub seed: u64,
    pub distribution: String,
    pub dim: usize,
    pub curve_points: usize,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            n: DEFAULT_MC_N,
            seed: 0,
            distribution: "standard_normal".into(),
            dim: 1,
            curve_points: 21,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleSection {
    pub n_steps: usize,
    pub dim: usize,
    pub delta: f64,
    pub delta_time: Option<f64>,
}

impl Default for SampleSection {
    fn default() -> Self {
        Self {
            n_steps: 10,
            dim: 4,
            delta: 0.0,
            delta_time: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub path: PathBuf,
    pub format: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            path: PathBuf::from("out"),
            format: "csv".into(),
        }
    }
}

/// Command-line overrides, one flag per config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(global = true, long = "schedule.family", visible_alias = "family", value_name = "NAME")]
    pub schedule_family: Option<String>,
    #[arg(global = true, long = "schedule.sigma_d", value_name = "X")]
    pub schedule_sigma_d: Option<f64>,
    #[arg(global = true, long = "schedule.t0", value_name = "X")]
    pub schedule_t0: Option<f64>,
    #[arg(global = true, long = "schedule.tf", value_name = "X")]
    pub schedule_tf: Option<f64>,
    #[arg(global = true, long = "schedule.clamp_eps", value_name = "X")]
    pub schedule_clamp_eps: Option<f64>,
    #[arg(global = true, long = "schedule.alpha_fn", value_name = "NAME")]
    pub schedule_alpha_fn: Option<String>,
    #[arg(global = true, long = "schedule.fault", value_name = "NAME")]
    pub schedule_fault: Option<String>,
    #[arg(global = true, long = "grid.n_points", visible_alias = "grid", value_name = "N")]
    pub grid_n_points: Option<usize>,
    #[arg(global = true, long = "grid.t_ref", value_name = "X")]
    pub grid_t_ref: Option<f64>,
    #[arg(global = true, long = "mc.n", visible_alias = "mc-n", value_name = "N")]
    pub mc_n: Option<usize>,
    #[arg(global = true, long = "mc.seed", visible_alias = "seed", value_name = "N")]
    pub mc_seed: Option<u64>,
    #[arg(global = true, long = "mc.distribution", value_name = "NAME")]
    pub mc_distribution: Option<String>,
    #[arg(global = true, long = "mc.dim", value_name = "N")]
    pub mc_dim: Option<usize>,
    #[arg(global = true, long = "mc.curve_points", value_name = "N")]
    pub mc_curve_points: Option<usize>,
    #[arg(global = true, long = "sample.n_steps", value_name = "N")]
    pub sample_n_steps: Option<usize>,
    #[arg(global = true, long = "sample.dim", value_name = "N")]
    pub sample_dim: Option<usize>,
    #[arg(global = true, long = "sample.delta", value_name = "X")]
    pub sample_delta: Option<f64>,
    #[arg(global = true, long = "sample.delta_time", value_name = "X")]
    pub sample_delta_time: Option<f64>,
    #[arg(global = true, long = "output.path", visible_alias = "out", value_name = "DIR")]
    pub output_path: Option<PathBuf>,
    #[arg(global = true, long = "output.format", value_name = "FORMAT")]
    pub output_format: Option<String>,
}

macro_rules! apply {
    ($src:expr => $dst:expr) => {
        if let Some(v) = $src.clone() {
            $dst = v;
        }
    };
    ($src:expr => some $dst:expr) => {
        if let Some(v) = &$src {
            $dst = Some(v.clone());
        }
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        apply!(o.schedule_family => self.schedule.family);
        apply!(o.schedule_sigma_d => self.schedule.sigma_d);
        apply!(o.schedule_t0 => some self.schedule.t0);
        apply!(o.schedule_tf => some self.schedule.tf);
        apply!(o.schedule_clamp_eps => self.schedule.clamp_eps);
        apply!(o.schedule_alpha_fn => self.schedule.alpha_fn);
        apply!(o.schedule_fault => some self.schedule.fault);
        apply!(o.grid_n_points => self.grid.n_points);
        apply!(o.grid_t_ref => some self.grid.t_ref);
        apply!(o.mc_n => self.mc.n);
        apply!(o.mc_seed => self.mc.seed);
        apply!(o.mc_distribution => self.mc.distribution);
        apply!(o.mc_dim => self.mc.dim);
        apply!(o.mc_curve_points => self.mc.curve_points);
        apply!(o.sample_n_steps => self.sample.n_steps);
        apply!(o.sample_dim => self.sample.dim);
        apply!(o.sample_delta => self.sample.delta);
        apply!(o.sample_delta_time => some self.sample.delta_time);
        apply!(o.output_path => self.output.path);
        apply!(o.output_format => self.output.format);
    }

    pub fn families(&self) -> Result<Vec<Family>, ConfigError> {
        let spec = self.schedule.family.trim();
        if spec.eq_ignore_ascii_case("all") {
            return Ok(Family::ALL.to_vec());
        }
        let mut out = Vec::new();
        for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let f: Family = name.parse()?;
            if !out.contains(&f) {
                out.push(f);
            }
        }
        if out.is_empty() {
            return Err(ConfigError::Invalid("schedule.family selects no family".into()));
        }
        Ok(out)
    }

    pub fn schedule_for(&self, family: Family) -> Result<Schedule, ConfigError> {
        let s = &self.schedule;
        let default = family.default_domain();
        let domain = TimeDomain::new(
            s.t0.unwrap_or(default.t0),
            s.tf.unwrap_or(default.tf),
            s.clamp_eps,
        )?;
        let alpha: AlphaFn = s.alpha_fn.parse()?;
        let mut schedule = Schedule::new(family)
            .with_sigma_d(s.sigma_d)?
            .with_alpha_fn(alpha)
            .with_domain(domain)?;
        if let Some(fault) = &s.fault {
            schedule = schedule.with_fault(fault.parse::<Fault>()?);
        }
        Ok(schedule)
    }

    pub fn schedules(&self) -> Result<Vec<Schedule>, ConfigError> {
        self.families()?
            .into_iter()
            .map(|f| self.schedule_for(f))
            .collect()
    }

    pub fn distribution(&self, dim: usize) -> Result<DataDistribution, ConfigError> {
        let dist = match self.mc.distribution.trim().to_ascii_lowercase().as_str() {
            "standard_normal" => DataDistribution::standard_normal(dim)?,
            "gaussian_mixture" => DataDistribution::default_mixture(dim)?,
            other => {
                return Err(ConfigError::Invalid(format!("unknown mc.distribution `{other}`")))
            }
        };
        Ok(dist)
    }

    /// Checks every value, including the schedules built from them.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.grid.n_points == 0 {
            return invalid("grid.n_points must be at least 1");
        }
        if self.mc.n < MIN_MC_N {
            return Err(ConfigError::Invalid(format!("mc.n must be at least {MIN_MC_N}")));
        }
        if self.mc.dim == 0 || self.sample.dim == 0 {
            return invalid("dimensions must be at least 1");
        }
        if self.mc.curve_points == 0 {
            return invalid("mc.curve_points must be at least 1");
        }
        if self.sample.n_steps == 0 {
            return invalid("sample.n_steps must be at least 1");
        }
        if !self.sample.delta.is_finite() {
            return invalid("sample.delta must be finite");
        }
        if !self.output.format.eq_ignore_ascii_case("csv") {
            return invalid("output.format must be `csv`");
        }
        self.schedules()?;
        self.distribution(self.mc.dim)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.schedules().unwrap().len(), 6);
    }

    #[test]
    fn parses_sections() {
        let c = RunConfig::from_toml(
            r#"
            [schedule]
            family = "edm_common, trig_flow"
            sigma_d = 0.7
            [grid]
            n_points = 11
            [mc]
            seed = 9
            "#,
        )
        .unwrap();
        assert_eq!(c.families().unwrap(), vec![Family::EdmCommon, Family::TrigFlow]);
        assert_eq!(c.schedule_for(Family::EdmCommon).unwrap().sigma_d, 0.7);
        assert_eq!(c.grid.n_points, 11);
        assert_eq!(c.mc.seed, 9);
        assert_eq!(c.mc.n, DEFAULT_MC_N);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("[schedule]\nsigma = 1.0\n").is_err());
        assert!(RunConfig::from_toml("[plot]\nx = 1\n").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let mut c = RunConfig::default();
        c.grid.n_points = 0;
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.schedule.family = "rectified_flow".into();
        c.schedule.tf = Some(2.0);
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.schedule.family = "nope".into();
        assert!(c.validate().is_err());
    }

    #[test]
    fn overrides_win() {
        let mut c = RunConfig::default();
        c.apply(&Overrides {
            schedule_family: Some("trig_flow".into()),
            mc_seed: Some(4),
            grid_t_ref: Some(0.1),
            ..Default::default()
        });
        assert_eq!(c.families().unwrap(), vec![Family::TrigFlow]);
        assert_eq!(c.mc.seed, 4);
        assert_eq!(c.grid.t_ref, Some(0.1));
    }

    #[test]
    fn fault_is_applied() {
        let mut c = RunConfig::default();
        c.schedule.fault = Some("flip_a22_sign".into());
        assert!(c.schedules().unwrap().iter().all(|s| s.fault == Some(Fault::FlipA22Sign)));
    }
}
