use std::collections::BTreeMap;

use super::{max_of, record_failure, sweep, Outcome};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::fit::fit_log_log;
use crate::report::{Criterion, RunReport, Series, SweepEntry};
use crate::run::{simulate, Setup};

/// Orbital stability: the sup over time of the `H^1` distance to the frozen
/// solitons at the tracked positions, for each configured amplitude.
pub fn run_stability(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let th = cfg.thresholds;
    let l = cfg.separation();
    let tail = (-cfg.gamma0()? * l).exp();
    let runs = sweep(
        cfg.alphas().into_iter().map(|a| (format!("alpha={a:e}"), cfg.with_alpha(a))).collect(),
        |c| simulate(c, Setup::soliton_sum(c)?),
    );

    let mut report = RunReport::new("stability", cfg);
    report.set("separation", l);
    report.set("exp_minus_gamma0_L", tail);
    let mut series = Series::default();
    let mut trajectory = None;
    let mut points = Vec::new();
    for (label, c, result) in runs {
        let run = match result {
            Ok(r) => r,
            Err(e) => {
                record_failure(&mut report, &label, &e);
                continue;
            }
        };
        let alpha = c.perturbation.alpha;
        let sup = max_of(run.rows.iter().map(|r| r.distance));
        let drift = max_of(run.rows.iter().map(|r| r.speed_drift));
        let mut q = BTreeMap::new();
        q.insert("sup_distance".into(), sup);
        q.insert("max_speed_drift".into(), drift);
        q.insert("perturbation_h1".into(), run.setup.perturbation_h1);
        q.insert("a0_estimate".into(), sup / (alpha + tail));
        report.sweep.push(SweepEntry { label: label.clone(), alpha, separation: l, quantities: q });
        report.criteria.push(Criterion::at_most(
            &format!("sup_distance[{label}]"),
            sup,
            th.distance_factor * alpha + th.distance_floor,
        ));
        points.push([alpha, sup]);
        if series.columns.is_empty() {
            series = run.series();
            if cfg.solver.save_snapshots {
                trajectory = Some(run.traj);
            }
        }
    }

    if let Some(a0) = report.sweep.iter().map(|e| e.quantities["a0_estimate"]).reduce(f64::max) {
        report.set("a0_fitted", a0);
    }
    if points.len() >= 2 {
        let mut sorted = points.clone();
        sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let worst = sorted.windows(2).map(|w| w[0][1] - w[1][1]).fold(f64::NEG_INFINITY, f64::max);
        report.criteria.push(Criterion::at_most("sup_distance_monotone_in_alpha", worst, th.distance_floor));
        let fit_pts: Vec<[f64; 2]> = points.iter().copied().filter(|p| p[0] > 0.0).collect();
        if fit_pts.len() >= 2 {
            report.add_fit("sup_distance_vs_alpha", fit_log_log(&fit_pts));
        }
    }
    let mut out = Outcome::new(report, series);
    out.trajectory = trajectory;
    Ok(out)
}
