use faer::prelude::*;
use faer::Mat;
use gkdv_core::modulation::{track, TrackOptions};
use gkdv_core::profiles::{kdv_nsoliton_centers, kdv_nsoliton_profile};
use gkdv_core::solver::{evolve, h1_norm, Spectral};
use gkdv_core::{Field, LabError, ModelParams, SolitonState};

use super::{max_of, Outcome};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::report::{Criterion, RunReport, Series};

const FIT_ITERATIONS: usize = 12;
const FIT_STEP: f64 = 1e-6;

/// `sqrt(h) (u, u_x)`, so that its Euclidean norm is the `H^1` norm.
fn h1_vector(f: &Field) -> Vec<f64> {
    let g = f.grid();
    let s = g.spacing().sqrt();
    let dx = Spectral::for_grid(g).derivative(f.values(), 1);
    f.values().iter().chain(&dx).map(|v| v * s).collect()
}

/// Gauss–Newton fit of the N-soliton to `u` in `H^1`. The parameters are the
/// phases, followed by the speeds when `fit_speeds` is set.
fn fit_member(
    u: &Field,
    params: ModelParams,
    speeds: &[f64],
    phases: &[f64],
    t: f64,
    fit_speeds: bool,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let n = speeds.len();
    let target = h1_vector(u);
    let unpack = |theta: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let c = if fit_speeds { theta[n..].to_vec() } else { speeds.to_vec() };
        (c, theta[..n].to_vec())
    };
    let residual = |theta: &[f64]| -> Result<Vec<f64>> {
        let (c, y) = unpack(theta);
        let m = h1_vector(&kdv_nsoliton_profile(params, &c, &y, t, u.grid())?);
        Ok(m.iter().zip(&target).map(|(a, b)| a - b).collect())
    };
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut theta: Vec<f64> = phases.to_vec();
    if fit_speeds {
        theta.extend(speeds);
    }
    let mut r = residual(&theta)?;
    for _ in 0..FIT_ITERATIONS {
        let k = theta.len();
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|a| {
                let step = FIT_STEP * theta[a].abs().max(1.0);
                let mut tp = theta.clone();
                tp[a] += step;
                residual(&tp).map(|rp| rp.iter().zip(&r).map(|(p, q)| (p - q) / step).collect())
            })
            .collect::<Result<_>>()?;
        let jtj = Mat::from_fn(k, k, |a, b| cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum::<f64>());
        let mut rhs = Mat::from_fn(k, 1, |a, _| -cols[a].iter().zip(&r).map(|(x, y)| x * y).sum::<f64>());
        jtj.partial_piv_lu().solve_in_place(&mut rhs);
        let delta: Vec<f64> = (0..k).map(|a| rhs[(a, 0)]).collect();
        if delta.iter().any(|d| !d.is_finite()) {
            break;
        }
        let trial: Vec<f64> = theta.iter().zip(&delta).map(|(a, d)| a + d).collect();
        let rt = residual(&trial)?;
        if norm(&rt) >= norm(&r) {
            break;
        }
        theta = trial;
        r = rt;
        if delta.iter().map(|d| d.abs()).fold(0.0, f64::max) < 1e-12 {
            break;
        }
    }
    let (c, y) = unpack(&theta);
    Ok((c, y, norm(&r)))
}

/// KdV N-soliton through collision: distance to the best tau-family member at
/// every snapshot, and the speeds before and after the interaction.
pub fn run_nsoliton(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate_model()?;
    if cfg.p != 2 {
        return Err(HarnessError::Config(format!("nsoliton needs p = 2, got p = {}", cfg.p)));
    }
    let th = cfg.thresholds;
    let params = cfg.params()?;
    let grid = cfg.make_grid()?;
    let speeds = cfg.speeds.clone();
    let phases = cfg.positions.clone();
    let v = cfg.solver.frame_velocity;
    let state0 = SolitonState::new(speeds.clone(), kdv_nsoliton_centers(&speeds, &phases, 0.0)?)?;
    let eps = cfg.perturbation.build(&state0, &grid, cfg.seed)?;
    let alpha = h1_norm(&eps);
    let u0 = kdv_nsoliton_profile(params, &speeds, &phases, 0.0, &grid)?.add(&eps)?;
    let traj = evolve(&u0, cfg.solver.t_final, params, &cfg.evolve_options()).map_err(LabError::from)?;
    let track_opts = TrackOptions {
        initial: Some(state0.clone()),
        skip_separation: Some(cfg.tracking.skip_separation.unwrap_or(20.0)),
        ..Default::default()
    };
    let tracked = track(&traj, speeds.len(), &track_opts);
    if let Some(f) = &tracked.failure {
        return Err(f.error.clone().into());
    }

    let n = speeds.len();
    let mut cols = vec!["t".to_string(), "distance".into()];
    cols.extend((1..=n).map(|j| format!("phase_{j}")));
    let mut series = Series::new(cols);
    // Phases in frame coordinates: U(xi + V t) = U(xi) with phases shifted by -V t.
    let mut current: Vec<f64> = phases.clone();
    let mut distances = Vec::new();
    for s in &traj.snapshots {
        let guess: Vec<f64> = current.iter().map(|y| y - v * s.t).collect();
        let (_, fitted, dist) = fit_member(&s.field, params, &speeds, &guess, s.t, false)?;
        current = fitted.iter().map(|y| y + v * s.t).collect();
        distances.push(dist);
        let mut row = vec![s.t, dist];
        row.extend(&current);
        series.push(row);
    }
    let last = traj.last();
    let frame_phases: Vec<f64> = phases.iter().map(|y| y - v * last.t).collect();
    let exact = kdv_nsoliton_profile(params, &speeds, &frame_phases, last.t, &grid)?;
    let final_l2 = last.field.sub(&exact)?.l2_norm();
    let (refit_c, _, _) = fit_member(
        &last.field,
        params,
        &speeds,
        &current.iter().map(|y| y - v * last.t).collect::<Vec<_>>(),
        last.t,
        true,
    )?;

    let points = &tracked.points;
    let first = points.first().ok_or_else(|| HarnessError::Config("no snapshot could be decomposed".into()))?;
    let end = points.last().expect("nonempty");
    let order = |x: &[f64]| x.windows(2).all(|w| w[0] < w[1]);
    let collided = !order(&first.lab_positions) && order(&end.lab_positions) && end.index > first.index;
    let pre = first.decomposition.state.speeds();
    let post = end.decomposition.state.speeds();
    let speed_return = max_of(pre.iter().zip(post).map(|(a, b)| (a - b).abs()));
    let post_vs_initial = max_of(speeds.iter().zip(post).map(|(a, b)| (a - b).abs()));

    let mut report = RunReport::new("nsoliton", cfg);
    let sup = max_of(distances.iter().copied());
    report.set("sup_distance", sup);
    report.set("perturbation_h1", alpha);
    report.set("final_l2_error_vs_tau", final_l2);
    report.set("post_collision_speed_error", post_vs_initial);
    report.set("skipped_snapshots", tracked.skipped.len() as f64);
    report.vectors.insert("pre_collision_speeds".into(), pre.to_vec());
    report.vectors.insert("post_collision_speeds".into(), post.to_vec());
    report.vectors.insert("refitted_speeds".into(), refit_c);
    report.criteria.push(Criterion::new(
        "collision_observed",
        collided,
        tracked.skipped.len() as f64,
        0.0,
        format!("solitons reorder between t = {} and t = {}", first.t, end.t),
    ));
    report.criteria.push(Criterion::at_most("sup_distance", sup, th.distance_factor * alpha + th.nsoliton_floor));
    report.criteria.push(Criterion::at_most("speeds_return", speed_return, th.speed_return));
    let mut out = Outcome::new(report, series);
    if cfg.solver.save_snapshots {
        out.trajectory = Some(traj);
    }
    Ok(out)
}
