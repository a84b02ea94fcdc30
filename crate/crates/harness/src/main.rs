use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gkdv_harness::{run_command, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "gkdv", version, about = "Stability experiments for multi-soliton solutions of gKdV")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the initial data and record conserved quantities.
    Simulate(Common),
    /// Decompose the initial data into solitons plus a remainder.
    Decompose(Common),
    /// Constrained and unconstrained spectra of the linearized energy form.
    Spectrum(Common),
    /// Sup-distance to the modulated soliton sum over time.
    Stability(Common),
    /// Almost-monotonicity of the localized masses.
    Monotonicity(Common),
    /// Quadratic control of the speed variations over an amplitude sweep.
    QuadraticControl(Common),
    /// Long-time decay of the rightward remainder and speed plateaus.
    Asymptotic(Common),
    /// KdV N-soliton through collision against the tau-function family.
    Nsoliton(Common),
}

impl Command {
    fn split(&self) -> (&'static str, &Common) {
        match self {
            Command::Simulate(c) => ("simulate", c),
            Command::Decompose(c) => ("decompose", c),
            Command::Spectrum(c) => ("spectrum", c),
            Command::Stability(c) => ("stability", c),
            Command::Monotonicity(c) => ("monotonicity", c),
            Command::QuadraticControl(c) => ("quadratic-control", c),
            Command::Asymptotic(c) => ("asymptotic", c),
            Command::Nsoliton(c) => ("nsoliton", c),
        }
    }
}

#[derive(Args)]
struct Common {
    /// TOML configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<u32>,
    /// Comma-separated speeds, increasing.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    speeds: Option<Vec<f64>>,
    /// Comma-separated initial centers (tau phases for nsoliton).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    positions: Option<Vec<f64>>,
    /// Perturbation H^1 norm; replaces any amplitude sweep.
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    grid: Option<usize>,
    /// Domain length.
    #[arg(long)]
    domain: Option<f64>,
    #[arg(long)]
    tfinal: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            p: self.p,
            speeds: self.speeds.clone(),
            positions: self.positions.clone(),
            alpha: self.alpha,
            grid: self.grid,
            domain: self.domain,
            t_final: self.tfinal,
            seed: self.seed,
            out: self.out.clone(),
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (name, common) = cli.command.split();
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&common.overrides());
    let outcome = run_command(name, &cfg)?;
    outcome.write(&cfg.out).with_context(|| format!("writing results to {}", cfg.out.display()))?;
    for c in &outcome.report.criteria {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    for f in &outcome.report.failures {
        println!("[FAIL] {}: {}", f.label, f.error);
    }
    println!("results written to {}", cfg.out.display());
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
