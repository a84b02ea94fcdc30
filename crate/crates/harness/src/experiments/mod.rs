//! The experiment families and the single-purpose commands.

mod asymptotic;
mod basic;
mod monotonicity;
mod nsoliton;
mod quadratic;
mod stability;

use std::path::Path;

use gkdv_core::solver::Trajectory;
use rayon::prelude::*;

pub use asymptotic::run_asymptotic;
pub use basic::{run_decompose, run_simulate, run_spectrum};
pub use monotonicity::{identity_check, run_monotonicity, IdentityCheck};
pub use nsoliton::run_nsoliton;
pub use quadratic::run_quadratic_control;
pub use stability::run_stability;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{write_run, RunFailure, RunReport, Series};

/// Everything a command produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub series: Series,
    pub trajectory: Option<Trajectory>,
    /// Additional files, as `(name, contents)`.
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn new(report: RunReport, series: Series) -> Self {
        Self { report, series, trajectory: None, files: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.report.passed()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_run(dir, &self.report, &self.series, self.trajectory.as_ref())?;
        for (name, text) in &self.files {
            std::fs::write(dir.join(name), text)?;
        }
        Ok(())
    }
}

/// Runs every configuration, in parallel, keeping the input order.
pub(crate) fn sweep<T: Send>(
    runs: Vec<(String, ExperimentConfig)>,
    f: impl Fn(&ExperimentConfig) -> Result<T> + Sync,
) -> Vec<(String, ExperimentConfig, Result<T>)> {
    runs.into_par_iter()
        .map(|(label, cfg)| {
            let r = f(&cfg);
            (label, cfg, r)
        })
        .collect()
}

pub(crate) fn record_failure(report: &mut RunReport, label: &str, err: &dyn std::fmt::Display) {
    report.failures.push(RunFailure { label: label.into(), error: err.to_string() });
}

pub(crate) fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Runs a command by name.
pub fn run_command(command: &str, cfg: &ExperimentConfig) -> Result<Outcome> {
    match command {
        "simulate" => run_simulate(cfg),
        "decompose" => run_decompose(cfg),
        "spectrum" => run_spectrum(cfg),
        "stability" => run_stability(cfg),
        "monotonicity" => run_monotonicity(cfg),
        "quadratic-control" => run_quadratic_control(cfg),
        "asymptotic" => run_asymptotic(cfg),
        "nsoliton" => run_nsoliton(cfg),
        other => Err(crate::error::HarnessError::Config(format!("unknown command {other}"))),
    }
}
