use gkdv_core::functionals::{constrained_spectrum, unconstrained_spectrum, PsiWeight, SpectralCertificate};
use gkdv_core::modulation::{decompose, DecomposeOptions};
use gkdv_core::solver::{conserved, evolve, h1_norm};
use gkdv_core::LabError;

use super::Outcome;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{Criterion, RunReport, Series};
use crate::run::Setup;

/// Evolves the initial data and records the conserved quantities. Passes when
/// the integration completes.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let setup = Setup::soliton_sum(cfg)?;
    let traj = evolve(&setup.u0, cfg.solver.t_final, setup.params, &cfg.evolve_options()).map_err(LabError::from)?;
    let mut series = Series::new(["t", "mass", "energy", "max_abs"].map(String::from).to_vec());
    for s in &traj.snapshots {
        let c = conserved(&s.field, setup.params);
        series.push(vec![s.t, c.mass, c.energy, s.field.max_abs()]);
    }
    let mut report = RunReport::new("simulate", cfg);
    let cons = traj.conservation;
    report.set("max_relative_mass_drift", cons.max_relative_mass_drift);
    report.set("max_relative_energy_drift", cons.max_relative_energy_drift);
    report.set("perturbation_h1", setup.perturbation_h1);
    report.criteria.push(Criterion::new("completed", true, traj.last().t, cfg.solver.t_final, "reached t_final".into()));
    let mut out = Outcome::new(report, series);
    if cfg.solver.save_snapshots {
        out.trajectory = Some(traj);
    }
    Ok(out)
}

/// Decomposes the initial data, seeded by the unperturbed solitons.
pub fn run_decompose(cfg: &ExperimentConfig) -> Result<Outcome> {
    let setup = Setup::soliton_sum(cfg)?;
    let dec = decompose(&setup.u0, &setup.state0, setup.params, &DecomposeOptions::default())?;
    let n = setup.state0.len();
    let mut cols: Vec<String> = (1..=n).map(|j| format!("c_{j}")).collect();
    cols.extend((1..=n).map(|j| format!("x_{j}")));
    cols.extend(["eps_l2", "eps_h1", "max_ortho_residual", "iterations"].map(String::from));
    let mut series = Series::new(cols);
    let mut row = dec.state.speeds().to_vec();
    row.extend(dec.state.positions());
    row.extend([dec.epsilon_l2(), dec.epsilon_h1(), dec.max_residual(), dec.newton_iterations as f64]);
    series.push(row);

    let mut report = RunReport::new("decompose", cfg);
    report.vectors.insert("speeds".into(), dec.state.speeds().to_vec());
    report.vectors.insert("positions".into(), dec.state.positions().to_vec());
    report.vectors.insert("ortho_residuals".into(), dec.ortho_residuals.clone());
    report.set("eps_h1", dec.epsilon_h1());
    report.set("perturbation_h1", setup.perturbation_h1);
    let mass = setup.u0.l2_norm();
    report.criteria.push(Criterion::at_most("ortho_residuals", dec.max_residual(), 1e-11 * mass.max(1.0)));
    Ok(Outcome::new(report, series))
}

/// Constrained and unconstrained spectra of the linearized energy form at the
/// configured (unperturbed) solitons; writes `spectrum.json`.
pub fn run_spectrum(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let params = cfg.params()?;
    let grid = cfg.make_grid()?;
    let state = cfg.state()?;
    let w = PsiWeight::new(state.sigma0(), params)?;
    let con = constrained_spectrum(&state, &w, params, &grid)?;
    let unc = unconstrained_spectrum(&state, &w, params, &grid)?;
    let cert = SpectralCertificate::new(params, &state, grid, &con);

    let mut series = Series::new(["index", "constrained", "unconstrained"].map(String::from).to_vec());
    for (k, (a, b)) in con.smallest.iter().zip(&unc.smallest).enumerate() {
        series.push(vec![k as f64, *a, *b]);
    }
    let mut report = RunReport::new("spectrum", cfg);
    report.set("lambda_min_constrained", con.lambda_min);
    report.set("lambda_min_unconstrained", unc.lambda_min);
    report.set("eigenvector_h1", h1_norm(&con.eigenvector));
    report.criteria.push(Criterion::new(
        "constrained_positive",
        cert.certifies(),
        con.lambda_min,
        cert.tolerance,
        format!("lambda_min {:.4e} > residual {:.1e}", con.lambda_min, cert.tolerance),
    ));
    report.criteria.push(Criterion::new(
        "unconstrained_negative",
        unc.lambda_min < -unc.residual,
        unc.lambda_min,
        0.0,
        format!("lambda_min {:.4e} < 0", unc.lambda_min),
    ));
    let mut out = Outcome::new(report, series);
    out.files.push(("spectrum.json".into(), serde_json::to_string_pretty(&cert)?));
    Ok(out)
}
