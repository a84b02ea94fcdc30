//! Least-squares line fits that keep their raw points.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// The points the line was fitted to, as given (before any log transform).
    pub points: Vec<[f64; 2]>,
    pub log_log: bool,
}

/// Ordinary least squares `y = slope x + intercept`; `None` with fewer than
/// two distinct abscissae.
pub fn fit_line(points: &[[f64; 2]]) -> Option<LineFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p[0] - mx).powi(2)).sum();
    if sxx <= 0.0 || !sxx.is_finite() {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p[0] - mx) * (p[1] - my)).sum();
    let slope = sxy / sxx;
    Some(LineFit { slope, intercept: my - slope * mx, points: points.to_vec(), log_log: false })
}

/// Fit of `log y` against `log x`. Points with a nonpositive coordinate are dropped.
pub fn fit_log_log(points: &[[f64; 2]]) -> Option<LineFit> {
    let kept: Vec<[f64; 2]> = points.iter().copied().filter(|p| p[0] > 0.0 && p[1] > 0.0).collect();
    let logs: Vec<[f64; 2]> = kept.iter().map(|p| [p[0].ln(), p[1].ln()]).collect();
    fit_line(&logs).map(|f| LineFit { points: kept, log_log: true, ..f })
}

/// Fit of `log y` against `x`; the slope is minus the decay rate.
pub fn fit_semilog(points: &[[f64; 2]]) -> Option<LineFit> {
    let kept: Vec<[f64; 2]> = points.iter().copied().filter(|p| p[1] > 0.0).collect();
    let logs: Vec<[f64; 2]> = kept.iter().map(|p| [p[0], p[1].ln()]).collect();
    fit_line(&logs).map(|f| LineFit { points: kept, log_log: false, ..f })
}
