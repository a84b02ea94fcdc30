use std::collections::BTreeMap;

use super::{max_of, record_failure, sweep, Outcome};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::fit::fit_log_log;
use crate::report::{Criterion, RunReport, Series, SweepEntry};
use crate::run::{simulate, Setup};

/// Speed variations against the amplitude: `sup_t sum_j |c_j(t) - c_j(0)|`
/// should scale like `alpha^2` and `sup_t |eps(t)|` like `|eps(0)|`.
pub fn run_quadratic_control(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    cfg.validate_alpha_sweep()?;
    let th = cfg.thresholds;
    let l = cfg.separation();
    let tail = (-cfg.gamma0()? * l).exp();
    let runs = sweep(
        cfg.sweep.alpha.iter().map(|&a| (format!("alpha={a:e}"), cfg.with_alpha(a))).collect(),
        |c| simulate(c, Setup::soliton_sum(c)?),
    );

    let mut report = RunReport::new("quadratic-control", cfg);
    report.set("exp_minus_gamma0_L", tail);
    let mut series = Series::default();
    let mut drift_pts = Vec::new();
    let mut eps_pts = Vec::new();
    let (mut k4, mut k5) = (0.0f64, 0.0f64);
    for (label, c, result) in runs {
        let run = match result {
            Ok(r) => r,
            Err(e) => {
                record_failure(&mut report, &label, &e);
                continue;
            }
        };
        let alpha = c.perturbation.alpha;
        let c_start = run.rows[0].speeds.clone();
        let drift = max_of(
            run.rows.iter().map(|r| r.speeds.iter().zip(&c_start).map(|(a, b)| (a - b).abs()).sum::<f64>()),
        );
        let eps0 = run.rows[0].eps_h1;
        let eps_sup = max_of(run.rows.iter().map(|r| r.eps_h1));
        k4 = k4.max(drift / (eps_sup * eps_sup + eps0 * eps0 + tail));
        k5 = k5.max(eps_sup * eps_sup / (eps0 * eps0 + tail));
        let mut q = BTreeMap::new();
        q.insert("sup_speed_variation".into(), drift);
        q.insert("eps0_h1".into(), eps0);
        q.insert("sup_eps_h1".into(), eps_sup);
        report.sweep.push(SweepEntry { label, alpha, separation: l, quantities: q });
        if alpha > 0.0 && drift > th.fit_floor {
            drift_pts.push([alpha, drift]);
            eps_pts.push([eps0, eps_sup]);
        }
        if series.columns.is_empty() {
            series = run.series();
        }
    }
    report.set("k4_fitted", k4);
    report.set("k5_fitted", k5);

    let speed_fit = fit_log_log(&drift_pts);
    if let Some(f) = &speed_fit {
        report.criteria.push(Criterion::within("speed_variation_slope", f.slope, th.speed_slope));
    }
    report.add_fit("speed_variation_vs_alpha", speed_fit);
    let eps_fit = fit_log_log(&eps_pts);
    if let Some(f) = &eps_fit {
        report.criteria.push(Criterion::within("eps_growth_slope", f.slope, th.eps_slope));
    }
    report.add_fit("sup_eps_vs_eps0", eps_fit);
    Ok(Outcome::new(report, series))
}
