//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed check or IO error, 2 usage or config
//! error. Every subcommand writes CSV files into `output.path` (`--out`).
//!
//! | subcommand    | file(s)                      | columns |
//! |---------------|------------------------------|---------|
//! | `table`       | `table_{family}.csv`         | t, a11, a12, a21, a22, det, psi, lambda, lambda_dot, phi_to_ref |
//! | `verify`      | `verify_report.csv`          | check, family, measured, relation, tolerance, status |
//! | `amplify`     | `amplify.csv`                | family, t, t_prime, analytic_phi, empirical_phi, abs_diff |
//! | `correlation` | `correlation_{family}.csv`   | t, analytic_psi, empirical_psi, std_error, n, seed |
//! | `sample`      | `trajectory_{family}.csv`    | step_index, t, coordinate_index, x_value |
//!
//! Cells that cannot be evaluated hold `nan`; `amplify` uses the sentinels
//! `singular`, `out_of_domain` and `time_order` instead.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::analysis::{amplification, table_rows};
use crate::config::{ConfigError, Overrides, RunConfig};
use crate::dynamics::{measure_amplification, reverse_trajectory, OraclePredictor};
use crate::empirical::{correlation_curve, draw_state};
use crate::error::Error;
use crate::output::{csv_io, csv_writer, fmt_real, write_atomic};
use crate::schedules::Schedule;
use crate::verify::{run_suite, VerifySettings};

#[derive(Debug, Parser)]
#[command(name = "diffcorr", version, about = "Linear-system analysis of diffusion and flow-matching schedules")]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coefficients, determinant, correlation, log-SNR and amplification on a grid.
    Table,
    /// Run the invariant suite; exits 1 if any check fails.
    Verify,
    /// Analytic versus injected-error amplification for one (t, t′) pair.
    Amplify {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long = "t-prime", alias = "t_prime", allow_negative_numbers = true)]
        t_prime: f64,
    },
    /// Analytic versus Monte Carlo Pearson correlation along the clamped domain.
    Correlation,
    /// Reverse trajectories driven by the exact oracle, optionally perturbed.
    Sample,
}

#[derive(Debug)]
enum Failure {
    Config(ConfigError),
    Io(io::Error),
    Runtime(Error),
    Checks(usize),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

/// Parses `args` (program name first) and runs the selected subcommand.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Checks(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(1)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&cli.overrides);
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    let out = PathBuf::from(&cfg.output.path);
    match &cli.command {
        Command::Table => cmd_table(&cfg, &out),
        Command::Verify => cmd_verify(&cfg, &out),
        Command::Amplify { t, t_prime } => cmd_amplify(&cfg, &out, *t, *t_prime),
        Command::Correlation => cmd_correlation(&cfg, &out),
        Command::Sample => cmd_sample(&cfg, &out),
    }
}

fn write_csv_file<F>(path: &Path, fill: F) -> io::Result<()>
where
    F: FnOnce(&mut csv::Writer<&mut dyn Write>) -> csv::Result<()>,
{
    write_atomic(path, |w| {
        let mut writer = csv_writer(w);
        fill(&mut writer).map_err(csv_io)?;
        writer.flush()
    })?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_table(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let schedules = cfg.schedules()?;
    schedules.par_iter().try_for_each(|s| -> io::Result<()> {
        let grid = s.domain.clamped_grid(cfg.grid.n_points);
        let rows = table_rows(s, &grid, cfg.grid.t_ref.unwrap_or(s.domain.t0));
        let path = out.join(format!("table_{}.csv", s.family.name()));
        write_csv_file(&path, |w| {
            w.write_record(["t", "a11", "a12", "a21", "a22", "det", "psi", "lambda", "lambda_dot", "phi_to_ref"])?;
            for (t, row) in grid.iter().zip(&rows) {
                let cells = match row {
                    Ok(r) => [
                        r.t, r.coeffs.a11, r.coeffs.a12, r.coeffs.a21, r.coeffs.a22, r.det, r.psi, r.lambda,
                        r.lambda_dot, r.phi_to_ref,
                    ],
                    Err(_) => {
                        let mut c = [f64::NAN; 10];
                        c[0] = *t;
                        c
                    }
                };
                w.write_record(cells.map(fmt_real))?;
            }
            Ok(())
        })
    })?;
    Ok(())
}

fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let settings = VerifySettings {
        grid_points: cfg.grid.n_points.max(2),
        mc_n: cfg.mc.n,
        seed: cfg.mc.seed,
        dist: cfg.distribution(cfg.mc.dim)?,
    };
    let report = run_suite(&cfg.schedules()?, &settings);
    let path = out.join("verify_report.csv");
    write_atomic(&path, |w| report.write_csv(w))?;
    report.write_csv(io::stdout().lock())?;
    let failed = report.failures().count();
    println!("{} checks, {} failed; report at {}", report.checks.len(), failed, path.display());
    if failed > 0 {
        Err(Failure::Checks(failed))
    } else {
        Ok(())
    }
}

fn amplify_row(s: &Schedule, t: f64, t_prime: f64) -> [String; 3] {
    let sentinel = |e: &Error| {
        match e {
            Error::SingularParameterization { .. } => "singular",
            Error::OutOfDomain { .. } => "out_of_domain",
            Error::TimeOrder { .. } => "time_order",
            _ => "nan",
        }
        .to_string()
    };
    match amplification(s, t, t_prime).map(f64::abs) {
        Err(e) => [sentinel(&e), sentinel(&e), sentinel(&e)],
        Ok(analytic) => match measure_amplification(s, t, t_prime, 1.0) {
            Ok(emp) => [fmt_real(analytic), fmt_real(emp), fmt_real((analytic - emp).abs())],
            Err(e) => [fmt_real(analytic), sentinel(&e), sentinel(&e)],
        },
    }
}

fn cmd_amplify(cfg: &RunConfig, out: &Path, t: f64, t_prime: f64) -> Result<(), Failure> {
    let schedules = cfg.schedules()?;
    let path = out.join("amplify.csv");
    write_csv_file(&path, |w| {
        w.write_record(["family", "t", "t_prime", "analytic_phi", "empirical_phi", "abs_diff"])?;
        for s in &schedules {
            let [a, e, d] = amplify_row(s, t, t_prime);
            w.write_record([s.family.name().to_string(), fmt_real(t), fmt_real(t_prime), a, e, d])?;
        }
        Ok(())
    })?;
    Ok(())
}

fn cmd_correlation(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let dist = cfg.distribution(cfg.mc.dim)?;
    for s in cfg.schedules()? {
        let grid = s.domain.clamped_grid(cfg.mc.curve_points);
        let curve = correlation_curve(&s, &dist, &grid, cfg.mc.n, cfg.mc.seed)?;
        let path = out.join(format!("correlation_{}.csv", s.family.name()));
        write_csv_file(&path, |w| {
            w.write_record(["t", "analytic_psi", "empirical_psi", "std_error", "n", "seed"])?;
            for p in &curve {
                w.write_record([
                    fmt_real(p.t),
                    fmt_real(p.analytic),
                    fmt_real(p.empirical),
                    fmt_real(p.std_error),
                    p.n.to_string(),
                    p.seed.to_string(),
                ])?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn cmd_sample(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let dist = cfg.distribution(cfg.sample.dim)?;
    let (z, eps) = draw_state(&dist, cfg.mc.seed);
    for s in cfg.schedules()? {
        let mut oracle = OraclePredictor::new(z.clone(), eps.clone())?;
        if cfg.sample.delta != 0.0 {
            oracle = oracle.with_delta(vec![cfg.sample.delta; z.len()], cfg.sample.delta_time)?;
        }
        let mut traj = reverse_trajectory(&s, &oracle, cfg.sample.n_steps, None)?;
        traj.seed = Some(cfg.mc.seed);
        let path = out.join(format!("trajectory_{}.csv", s.family.name()));
        write_atomic(&path, |w| traj.write_csv(w))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
