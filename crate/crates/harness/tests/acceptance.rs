//! The eight acceptance criteria, each at its stated tolerance. Every test
//! prints one PASS/FAIL line before asserting.

use std::io::Write;

use gkdv_core::functionals::{constrained_spectrum, energy_expansion_residual, unconstrained_spectrum, PsiWeight};
use gkdv_core::modulation::{decompose, ortho_jacobian, ortho_residual, DecomposeOptions, JacobianMode};
use gkdv_core::profiles::{sample_soliton, soliton_sum};
use gkdv_core::solver::{evolve, EvolveOptions};
use gkdv_core::{Field, Grid, ModelParams, SolitonState};
use gkdv_harness::config::{ExperimentConfig, GridSpec, SolverSpec};
use gkdv_harness::fit::fit_semilog;
use gkdv_harness::perturbation::{PerturbationKind, PerturbationSpec, Placement};
use gkdv_harness::report::RunReport;
use gkdv_harness::{run_asymptotic, run_monotonicity, run_nsoliton, run_quadratic_control};

fn params(p: u32) -> ModelParams {
    ModelParams::new(p).unwrap()
}

/// Written straight to stdout so the line shows up even when test output is captured.
fn verdict(n: u32, name: &str, passed: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {n} ({name}): {} {detail}", if passed { "PASS" } else { "FAIL" }).unwrap();
}

fn show(report: &RunReport) {
    for c in &report.criteria {
        println!("    [{}] {}: {}", if c.passed { "pass" } else { "fail" }, c.name, c.detail);
    }
    for f in &report.failures {
        println!("    [fail] {}: {}", f.label, f.error);
    }
}

/// Two solitons `c = (1, 2)` with a bump in a frame moving at 1.5 with the sponge on.
fn two_soliton(alpha: f64, separation: f64, placement: Placement, t_final: f64) -> ExperimentConfig {
    ExperimentConfig {
        p: 2,
        speeds: vec![1.0, 2.0],
        positions: vec![-separation / 2.0, separation / 2.0],
        separation: Some(separation),
        perturbation: PerturbationSpec { kind: PerturbationKind::SmoothBump, alpha, placement, width: 3.0, bandwidth: 2.0 },
        grid: GridSpec { points: 4096, domain: 512.0 },
        solver: SolverSpec { dt: 1e-3, t_final, cadence: 0.5, ..SolverSpec::default() },
        ..ExperimentConfig::default()
    }
}

#[test]
fn criterion_1_solver_fidelity() {
    let g = Grid::new(256.0, 4096).unwrap();
    let s = SolitonState::new(vec![1.0], vec![-5.0]).unwrap();
    let u0 = soliton_sum(params(2), &s, &g).unwrap();
    let t = 10.0;
    let traj = evolve(&u0, t, params(2), &EvolveOptions::new(1e-4, t)).unwrap();
    let exact = Field::new(g, sample_soliton(params(2), 1.0, -5.0 + t, &g, 0)).unwrap();
    let err = traj.last().field.sub(&exact).unwrap().l2_norm();
    let c = traj.conservation;
    let passed = err <= 1e-6 && c.max_relative_mass_drift <= 1e-9 && c.max_relative_energy_drift <= 1e-8;
    let detail = format!(
        "L2 error {err:.2e} (<= 1e-6), mass drift {:.2e} (<= 1e-9), energy drift {:.2e} (<= 1e-8)",
        c.max_relative_mass_drift, c.max_relative_energy_drift
    );
    verdict(1, "solver fidelity", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_2_integrable_oracle() {
    // The fast soliton starts behind the slow one and overtakes it near t = 8.
    let cfg = ExperimentConfig {
        p: 2,
        speeds: vec![1.0, 4.0],
        positions: vec![-25.0, -50.0],
        perturbation: PerturbationSpec { kind: PerturbationKind::None, alpha: 0.0, ..PerturbationSpec::default() },
        grid: GridSpec { points: 4096, domain: 256.0 },
        solver: SolverSpec { dt: 1e-4, t_final: 30.0, cadence: 0.5, frame_velocity: 0.0, sponge: false, ..SolverSpec::default() },
        ..ExperimentConfig::default()
    };
    let out = run_nsoliton(&cfg).unwrap();
    show(&out.report);
    let l2 = out.report.quantity("final_l2_error_vs_tau").unwrap();
    let speed_err = out.report.quantity("post_collision_speed_error").unwrap();
    let collided = out.report.criterion("collision_observed").unwrap().passed;
    let passed = l2 <= 1e-5 && speed_err <= 1e-4 && collided;
    let detail = format!("L2 error at T {l2:.2e} (<= 1e-5), post-collision speed error {speed_err:.2e} (<= 1e-4)");
    verdict(2, "integrable oracle", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_3_modulation_correctness() {
    let g = Grid::new(256.0, 2048).unwrap();
    let alpha = 1e-3;
    let truth = SolitonState::new(vec![1.0, 2.0, 3.0], vec![-50.0, 0.0, 50.0]).unwrap();
    let bump = PerturbationSpec { alpha, placement: Placement::Soliton(2), ..PerturbationSpec::default() };
    let u = soliton_sum(params(2), &truth, &g).unwrap().add(&bump.build(&truth, &g, 0).unwrap()).unwrap();
    let dec = decompose(&u, &truth, params(2), &DecomposeOptions::default()).unwrap();
    let dc = dec.state.speeds().iter().zip(truth.speeds()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let residual = ortho_residual(&u, &dec.state, params(2)).iter().fold(0.0f64, |m, r| m.max(r.abs()));

    let mut jac_err: f64 = 0.0;
    let g1 = Grid::new(128.0, 2048).unwrap();
    for p in 2..=4 {
        let pf = p as f64;
        let mass_q = params(p).constants().mass;
        for c in [1.0, 2.0] {
            let s = SolitonState::new(vec![c], vec![0.0]).unwrap();
            let j = ortho_jacobian(&soliton_sum(params(p), &s, &g1).unwrap(), &s, params(p), JacobianMode::Analytic);
            let formula = -((5.0 - pf) / (4.0 * (pf - 1.0))) * c.powf((7.0 - 3.0 * pf) / (2.0 * (pf - 1.0))) * mass_q;
            jac_err = jac_err.max(((j[(0, 0)] - formula) / formula).abs());
        }
    }
    let passed = dc <= 5.0 * alpha && residual < 1e-11 && jac_err <= 1e-5;
    let detail = format!(
        "max |dc| {dc:.2e} (<= 5 alpha = {:.0e}), max residual {residual:.2e} (< 1e-11), Jacobian diagonal error {jac_err:.2e} (<= 1e-5)",
        5.0 * alpha
    );
    verdict(3, "modulation correctness", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_4_quadratic_form_positivity() {
    let g = Grid::new(256.0, 2048).unwrap();
    let mut failures = Vec::new();
    let mut worst_constrained = f64::INFINITY;
    let mut worst_unconstrained = f64::NEG_INFINITY;
    for p in 2..=4 {
        for n in 1..=3usize {
            for sep in [20.0, 40.0] {
                let speeds: Vec<f64> = (1..=n).map(|j| j as f64).collect();
                let positions: Vec<f64> = (0..n).map(|j| (j as f64 - 0.5 * (n as f64 - 1.0)) * sep).collect();
                let s = SolitonState::new(speeds, positions).unwrap();
                let w = PsiWeight::new(s.sigma0(), params(p)).unwrap();
                let con = constrained_spectrum(&s, &w, params(p), &g).unwrap();
                let unc = unconstrained_spectrum(&s, &w, params(p), &g).unwrap();
                worst_constrained = worst_constrained.min(con.lambda_min);
                worst_unconstrained = worst_unconstrained.max(unc.lambda_min);
                if !(con.lambda_min > 0.0 && unc.lambda_min < 0.0) {
                    failures.push(format!("p={p} N={n} L={sep}: {:.3e} / {:.3e}", con.lambda_min, unc.lambda_min));
                }
            }
        }
    }
    let passed = failures.is_empty();
    let detail = format!(
        "18 cases, smallest constrained lambda_min {worst_constrained:.3e} (> 0), largest unconstrained {worst_unconstrained:.3e} (< 0) {failures:?}"
    );
    verdict(4, "quadratic-form positivity", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_5_monotonicity() {
    let cfg = two_soliton(1e-2, 60.0, Placement::Soliton(2), 50.0);
    let out = run_monotonicity(&cfg).unwrap();
    show(&out.report);
    let r = &out.report;
    let inc = r.criterion("max_increase_I").unwrap();
    let doubling = r.criterion("doubling_reduction[L=120]").unwrap();
    let identity = r.criterion("dI_dt_identity").unwrap();
    let passed = inc.value <= 1e-3 && doubling.passed && identity.value <= 1e-5;
    let detail = format!(
        "max I_2 increase {:.2e} (<= 1e-3), at L=120 {:.2e} (factor >= 10), identity residual {:.2e} (<= 1e-5)",
        inc.value, doubling.value, identity.value
    );
    verdict(5, "monotonicity", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_6_quadratic_speed_control() {
    let mut cfg = two_soliton(1e-2, 300.0, Placement::Soliton(1), 30.0);
    cfg.sweep.alpha = vec![3e-3, 1e-2, 3e-2, 1e-1];
    let out = run_quadratic_control(&cfg).unwrap();
    show(&out.report);
    let speed = out.report.fit("speed_variation_vs_alpha").map(|f| f.slope).unwrap_or(f64::NAN);
    let eps = out.report.fit("sup_eps_vs_eps0").map(|f| f.slope).unwrap_or(f64::NAN);
    let passed = (1.7..=2.3).contains(&speed) && (0.8..=1.2).contains(&eps) && out.report.failures.is_empty();
    let detail = format!("speed-variation slope {speed:.3} (in [1.7, 2.3]), eps-growth slope {eps:.3} (in [0.8, 1.2])");
    verdict(6, "quadratic speed control", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_7_asymptotic_decay() {
    let mut cfg = two_soliton(3e-2, 40.0, Placement::Soliton(1), 300.0);
    cfg.solver.dt = 2e-3;
    cfg.solver.cadence = 1.0;
    let out = run_asymptotic(&cfg).unwrap();
    show(&out.report);
    let r = &out.report;
    let label = "alpha=3e-2";
    let mono = r.criterion(&format!("eps_right_nonincreasing[{label}]")).unwrap();
    let frac = r.criterion(&format!("eps_right_final_fraction[{label}]")).unwrap();
    let plateau = r.criterion(&format!("speed_plateau[{label}]")).unwrap();
    let passed = mono.passed && frac.passed && plateau.passed;
    let detail = format!(
        "largest windowed rise after peak {:.2e} (<= 0), final/peak {:.3} (<= 1/3), late speed std {:.2e} (<= 1e-4)",
        mono.value, frac.value, plateau.value
    );
    verdict(7, "asymptotic decay probe", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_8_exponent_fits() {
    // Slow speeds keep the interaction terms above round-off out to L = 40.
    let g = Grid::new(256.0, 4096).unwrap();
    let speeds = vec![0.25, 0.5];
    let seps = [20.0, 30.0, 40.0];
    let mut jac_pts = Vec::new();
    let mut energy_pts = Vec::new();
    let mut target = 0.0;
    for &l in &seps {
        let s = SolitonState::new(speeds.clone(), vec![-l / 2.0, l / 2.0]).unwrap();
        target = 0.9 * s.sigma0().sqrt() / 2.0;
        let u = soliton_sum(params(2), &s, &g).unwrap();
        let j = ortho_jacobian(&u, &s, params(2), JacobianMode::Analytic);
        let mut off: f64 = 0.0;
        for a in 0..2 {
            for b in 2..4 {
                off = off.max(j[(a, b)].abs()).max(j[(b, a)].abs());
            }
        }
        jac_pts.push([l, off]);
        let e = energy_expansion_residual(&u, &s, &Field::zeros(g), &s, params(2)).unwrap();
        energy_pts.push([l, e.defect.abs()]);
    }
    let jac_rate = -fit_semilog(&jac_pts).unwrap().slope;
    let energy_rate = -fit_semilog(&energy_pts).unwrap().slope;
    println!("    Jacobian off-diagonals {jac_pts:?}");
    println!("    energy defects {energy_pts:?}");
    let passed = jac_rate >= target && energy_rate >= target;
    let detail = format!("Jacobian rate {jac_rate:.3}, energy-defect rate {energy_rate:.3} (>= {target:.3})");
    verdict(8, "exponent fits", passed, &detail);
    assert!(passed, "{detail}");
}
