use std::collections::BTreeMap;

use super::{max_of, record_failure, sweep, Outcome};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::report::{Criterion, RunReport, Series, SweepEntry};
use crate::run::{simulate, Diagnostics, Setup};

/// Means of `value` over consecutive windows `[k w, (k + 1) w)` of `t`.
pub fn window_means(rows: &[Diagnostics], window: f64, value: impl Fn(&Diagnostics) -> f64) -> Vec<f64> {
    let mut sums: Vec<(f64, usize)> = Vec::new();
    for r in rows {
        let k = (r.t / window + 1e-9).floor() as usize;
        if sums.len() <= k {
            sums.resize(k + 1, (0.0, 0));
        }
        sums[k].0 += value(r);
        sums[k].1 += 1;
    }
    sums.into_iter().filter(|s| s.1 > 0).map(|(s, n)| s / n as f64).collect()
}

fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Long-time behavior with radiation absorbed by the sponge: decay of the
/// rightward `eps` mass and plateaus of the speeds.
pub fn run_asymptotic(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    if !cfg.solver.sponge {
        return Err(HarnessError::Config("the asymptotic probe needs the sponge layer".into()));
    }
    if cfg.solver.t_final < 200.0 {
        return Err(HarnessError::Config(format!("the asymptotic probe needs t_final >= 200, got {}", cfg.solver.t_final)));
    }
    let th = cfg.thresholds;
    let runs = sweep(
        cfg.alphas().into_iter().map(|a| (format!("alpha={a:e}"), cfg.with_alpha(a))).collect(),
        |c| simulate(c, Setup::soliton_sum(c)?),
    );

    let mut report = RunReport::new("asymptotic", cfg);
    let mut series = Series::default();
    let mut trajectory = None;
    for (label, c, result) in runs {
        let run = match result {
            Ok(r) => r,
            Err(e) => {
                record_failure(&mut report, &label, &e);
                continue;
            }
        };
        let alpha = c.perturbation.alpha;
        let means = window_means(&run.rows, cfg.asymptotic.window, |r| r.eps_right);
        let late: Vec<&Diagnostics> = run.rows.iter().filter(|r| r.t >= 0.75 * cfg.solver.t_final).collect();
        let n = run.setup.state0.len();
        let mut q = BTreeMap::new();
        let mut plateaus = Vec::new();
        for j in 0..n {
            let cj: Vec<f64> = late.iter().map(|r| r.speeds[j]).collect();
            let (mean, std) = mean_and_std(&cj);
            q.insert(format!("c_{}_plus_infinity", j + 1), mean);
            q.insert(format!("c_{}_drift", j + 1), mean - run.setup.state0.speeds()[j]);
            q.insert(format!("c_{}_late_std", j + 1), std);
            plateaus.push(std);
        }
        let peak = max_of(means.iter().copied());
        let final_value = *means.last().expect("at least one window");
        q.insert("peak_window_mean".into(), peak);
        q.insert("final_window_mean".into(), final_value);
        report.sweep.push(SweepEntry { label: label.clone(), alpha, separation: cfg.separation(), quantities: q });

        report.criteria.push(Criterion::at_most(&format!("speed_plateau[{label}]"), max_of(plateaus), th.plateau_std));
        if alpha == 0.0 {
            let sup = max_of(run.rows.iter().map(|r| r.eps_right));
            report.criteria.push(Criterion::at_most(&format!("eps_right_floor[{label}]"), sup, th.eps_floor));
        } else {
            let kp = means.iter().position(|&m| m == peak).expect("peak is a window mean");
            // Largest rise between consecutive windows after the peak.
            let rise = means[kp..].windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
            report.criteria.push(Criterion::at_most(&format!("eps_right_nonincreasing[{label}]"), rise, 0.0));
            report.criteria.push(Criterion::at_most(
                &format!("eps_right_final_fraction[{label}]"),
                final_value / peak,
                th.final_fraction,
            ));
        }
        report.vectors.insert(format!("eps_right_window_means[{label}]"), means);
        if series.columns.is_empty() {
            series = run.series();
            if cfg.solver.save_snapshots {
                trajectory = Some(run.traj);
            }
        }
    }
    let mut out = Outcome::new(report, series);
    out.trajectory = trajectory;
    Ok(out)
}
