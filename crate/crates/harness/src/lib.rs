//! Experiment orchestration for the gKdV stability laboratory: configuration,
//! perturbations, the experiment families, fits and reports.

pub mod config;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod perturbation;
pub mod report;
pub mod run;

pub use config::{ExperimentConfig, Overrides};
pub use error::{HarnessError, Result};
pub use experiments::{
    run_asymptotic, run_command, run_decompose, run_monotonicity, run_nsoliton, run_quadratic_control,
    run_simulate, run_spectrum, run_stability, Outcome,
};
pub use report::RunReport;
