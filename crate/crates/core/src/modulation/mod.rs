//! Modulation: splitting a field into `sum_j Q_{c_j}(x - x_j) + eps` with
//! `eps` orthogonal to every `R_j = Q_{c_j}(. - x_j)` and `(R_j)_x`.
//!
//! Residuals and Jacobian rows are ordered `(rho1_1, rho2_1, rho1_2, ...)`,
//! Jacobian columns `(c_1, x_1, c_2, x_2, ...)`.

mod track;

use faer::prelude::*;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::profiles::{sample_soliton, ModelParams, SolitonState};
use crate::solver::{h1_norm, Field, Grid};

pub use track::{track, write_decomposition_csv, TrackFailure, TrackOptions, TrackResult, TrackedPoint};

/// A converged modulation decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub state: SolitonState,
    pub epsilon: Field,
    pub ortho_residuals: Vec<f64>,
    pub newton_iterations: usize,
}

impl Decomposition {
    pub fn max_residual(&self) -> f64 {
        self.ortho_residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn epsilon_l2(&self) -> f64 {
        self.epsilon.l2_norm()
    }

    pub fn epsilon_h1(&self) -> f64 {
        h1_norm(&self.epsilon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JacobianMode {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecomposeOptions {
    /// Converged once every residual is below `tolerance_scale * sqrt(int u^2)`.
    pub tolerance_scale: f64,
    pub max_iter: usize,
    pub max_halvings: u32,
    /// Smallest admissible distance between two centers, across the seam too.
    pub min_separation: f64,
    pub max_condition: f64,
    pub jacobian: JacobianMode,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            tolerance_scale: 1e-11,
            max_iter: 50,
            max_halvings: 6,
            min_separation: 10.0,
            max_condition: 1e12,
            jacobian: JacobianMode::Analytic,
        }
    }
}

/// Relative step of the central-difference Jacobian.
pub const FD_RELATIVE_STEP: f64 = 1e-6;

// Sampled R_j and the derivatives the Jacobian needs.
struct Bumps {
    r: Vec<f64>,
    rx: Vec<f64>,
}

fn bumps(params: ModelParams, c: f64, x0: f64, grid: &Grid) -> Bumps {
    Bumps { r: sample_soliton(params, c, x0, grid, 0), rx: sample_soliton(params, c, x0, grid, 1) }
}

fn epsilon_raw(u: &Field, params: ModelParams, speeds: &[f64], positions: &[f64]) -> (Vec<f64>, Vec<Bumps>) {
    let grid = u.grid();
    let parts: Vec<Bumps> = speeds.iter().zip(positions).map(|(&c, &x)| bumps(params, c, x, grid)).collect();
    let mut eps = u.values().to_vec();
    for b in &parts {
        for (e, r) in eps.iter_mut().zip(&b.r) {
            *e -= r;
        }
    }
    (eps, parts)
}

fn dot(h: f64, a: &[f64], b: &[f64]) -> f64 {
    h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

fn residual_raw(u: &Field, params: ModelParams, speeds: &[f64], positions: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let h = u.grid().spacing();
    let (eps, parts) = epsilon_raw(u, params, speeds, positions);
    let res = parts.iter().flat_map(|b| [dot(h, &b.r, &eps), dot(h, &b.rx, &eps)]).collect();
    (res, eps)
}

/// `(int R_j eps, int (R_j)_x eps)` for every soliton, by the trapezoid rule.
pub fn ortho_residual(u: &Field, state: &SolitonState, params: ModelParams) -> Vec<f64> {
    residual_raw(u, params, state.speeds(), state.positions()).0
}

fn analytic_jacobian(u: &Field, params: ModelParams, speeds: &[f64], positions: &[f64]) -> Mat<f64> {
    let grid = u.grid();
    let h = grid.spacing();
    let n = speeds.len();
    let (eps, parts) = epsilon_raw(u, params, speeds, positions);
    let dc: Vec<[Vec<f64>; 2]> = speeds
        .iter()
        .zip(positions)
        .map(|(&c, &x0)| {
            let d = |order| {
                (0..grid.n_points())
                    .map(|i| params.qc_speed_derivative(c, grid.wrap(grid.x(i) - x0), order))
                    .collect::<Vec<f64>>()
            };
            [d(0), d(1)]
        })
        .collect();
    let rxx: Vec<Vec<f64>> =
        speeds.iter().zip(positions).map(|(&c, &x0)| sample_soliton(params, c, x0, grid, 2)).collect();

    let mut jac = Mat::<f64>::zeros(2 * n, 2 * n);
    for j in 0..n {
        // rows rho1_j = int R_j eps and rho2_j = int (R_j)_x eps
        let rows = [&parts[j].r, &parts[j].rx];
        for (a, row) in rows.iter().enumerate() {
            for k in 0..n {
                // d eps / d c_k = -dR_k/dc, d eps / d x_k = (R_k)_x
                let mut d_c = -dot(h, row, &dc[k][0]);
                let mut d_x = dot(h, row, &parts[k].rx);
                if j == k {
                    d_c += dot(h, &dc[j][a], &eps);
                    // d(R_j)/dx_j = -(R_j)_x, d(R_j)_x/dx_j = -(R_j)_xx
                    let shifted = if a == 0 { &parts[j].rx } else { &rxx[j] };
                    d_x -= dot(h, shifted, &eps);
                }
                jac[(2 * j + a, 2 * k)] = d_c;
                jac[(2 * j + a, 2 * k + 1)] = d_x;
            }
        }
    }
    jac
}

fn fd_jacobian(u: &Field, params: ModelParams, speeds: &[f64], positions: &[f64]) -> Mat<f64> {
    let n = speeds.len();
    let mut jac = Mat::<f64>::zeros(2 * n, 2 * n);
    for k in 0..n {
        for which in 0..2 {
            let (mut cp, mut xp) = (speeds.to_vec(), positions.to_vec());
            let (mut cm, mut xm) = (speeds.to_vec(), positions.to_vec());
            let step = if which == 0 {
                let s = FD_RELATIVE_STEP * speeds[k];
                cp[k] += s;
                cm[k] -= s;
                s
            } else {
                let s = FD_RELATIVE_STEP * positions[k].abs().max(1.0);
                xp[k] += s;
                xm[k] -= s;
                s
            };
            let rp = residual_raw(u, params, &cp, &xp).0;
            let rm = residual_raw(u, params, &cm, &xm).0;
            for row in 0..2 * n {
                jac[(row, 2 * k + which)] = (rp[row] - rm[row]) / (2.0 * step);
            }
        }
    }
    jac
}

/// Derivative of [`ortho_residual`] with respect to `(c_1, x_1, ..., c_N, x_N)`.
pub fn ortho_jacobian(u: &Field, state: &SolitonState, params: ModelParams, mode: JacobianMode) -> Mat<f64> {
    match mode {
        JacobianMode::Analytic => analytic_jacobian(u, params, state.speeds(), state.positions()),
        JacobianMode::FiniteDifference => fd_jacobian(u, params, state.speeds(), state.positions()),
    }
}

/// Ratio of extreme singular values.
pub fn condition_number(m: &Mat<f64>) -> Result<f64> {
    let s = m
        .singular_values()
        .map_err(|e| LabError::DegenerateConfiguration(format!("SVD failed: {e:?}")))?;
    let (max, min) = (s[0], s[s.len() - 1]);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}

/// Smallest distance between two centers on the periodic cell.
pub fn min_separation(positions: &[f64], grid: &Grid) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..positions.len() {
        for j in 0..i {
            best = best.min(grid.wrap(positions[i] - positions[j]).abs());
        }
    }
    best
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, r| m.max(r.abs()))
}

fn check_separation(positions: &[f64], grid: &Grid, options: &DecomposeOptions) -> Result<()> {
    let sep = min_separation(positions, grid);
    if sep < options.min_separation {
        return Err(LabError::DegenerateConfiguration(format!(
            "solitons {sep:.3} apart, below the minimum separation {}",
            options.min_separation
        )));
    }
    Ok(())
}

/// Damped Newton iteration on the orthogonality conditions, started at `guess`.
pub fn decompose(
    u: &Field,
    guess: &SolitonState,
    params: ModelParams,
    options: &DecomposeOptions,
) -> Result<Decomposition> {
    let grid = *u.grid();
    check_separation(guess.positions(), &grid, options)?;
    let tol = options.tolerance_scale * u.l2_norm().max(f64::MIN_POSITIVE);
    let n = guess.len();
    let mut c = guess.speeds().to_vec();
    let mut x = guess.positions().to_vec();
    let (mut res, mut eps) = residual_raw(u, params, &c, &x);
    let mut norm = max_abs(&res);
    let mut iterations = 0;
    let failure = |iterations, residual, c: &[f64], x: &[f64]| LabError::DecompositionFailure {
        iterations,
        residual,
        last_speeds: c.to_vec(),
        last_positions: x.to_vec(),
    };

    // After convergence a couple of extra steps push the residual to round-off.
    let mut polish = 2;
    while norm > tol || polish > 0 {
        if norm <= tol {
            polish -= 1;
        }
        if iterations >= options.max_iter {
            if norm <= tol {
                break;
            }
            return Err(failure(iterations, norm, &c, &x));
        }
        let jac = match options.jacobian {
            JacobianMode::Analytic => analytic_jacobian(u, params, &c, &x),
            JacobianMode::FiniteDifference => fd_jacobian(u, params, &c, &x),
        };
        let cond = condition_number(&jac)?;
        if cond > options.max_condition {
            return Err(LabError::DegenerateConfiguration(format!(
                "orthogonality Jacobian has condition number {cond:e}"
            )));
        }
        let mut delta = Mat::<f64>::from_fn(2 * n, 1, |i, _| -res[i]);
        jac.partial_piv_lu().solve_in_place(&mut delta);
        iterations += 1;

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=options.max_halvings {
            let cn: Vec<f64> = (0..n).map(|j| c[j] + lambda * delta[(2 * j, 0)]).collect();
            let xn: Vec<f64> = (0..n).map(|j| x[j] + lambda * delta[(2 * j + 1, 0)]).collect();
            if cn.iter().chain(&xn).all(|v| v.is_finite()) && cn.iter().all(|&v| v > 0.0) {
                let (rn, en) = residual_raw(u, params, &cn, &xn);
                let nn = max_abs(&rn);
                if nn < norm {
                    (c, x, res, eps, norm) = (cn, xn, rn, en, nn);
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            if norm <= tol {
                break;
            }
            return Err(failure(iterations, norm, &c, &x));
        }
    }

    check_separation(&x, &grid, options)?;
    let state = SolitonState::new(c, x).map_err(|e| LabError::DegenerateConfiguration(e.to_string()))?;
    Ok(Decomposition { state, epsilon: Field::new(grid, eps)?, ortho_residuals: res, newton_iterations: iterations })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuessOptions {
    /// Peaks below this height are ignored.
    pub amplitude_floor: f64,
    /// Accepted peaks are at least this far apart.
    pub min_peak_distance: f64,
}

impl Default for GuessOptions {
    fn default() -> Self {
        Self { amplitude_floor: 0.05, min_peak_distance: 5.0 }
    }
}

/// Centers and speeds read off the `n` highest well-separated local maxima.
pub fn initial_guess(u: &Field, n: usize, params: ModelParams, options: &GuessOptions) -> Result<SolitonState> {
    let grid = u.grid();
    let v = u.values();
    let len = v.len();
    let h = grid.spacing();
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 0..len {
        let (l, m, r) = (v[(i + len - 1) % len], v[i], v[(i + 1) % len]);
        if m > options.amplitude_floor && m > l && m >= r {
            // parabola through the three samples
            let curv = l - 2.0 * m + r;
            let shift = if curv < 0.0 { 0.5 * (l - r) / curv } else { 0.0 };
            let height = m - 0.25 * (l - r) * shift;
            peaks.push((height, grid.wrap(grid.x(i) + shift * h)));
        }
    }
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut chosen: Vec<(f64, f64)> = Vec::with_capacity(n);
    for (height, x) in peaks {
        if chosen.len() == n {
            break;
        }
        if chosen.iter().all(|&(_, y)| grid.wrap(x - y).abs() >= options.min_peak_distance) {
            chosen.push((height, x));
        }
    }
    if chosen.len() < n {
        return Err(LabError::GuessFailure(format!(
            "found {} admissible peaks above {}, need {n}",
            chosen.len(),
            options.amplitude_floor
        )));
    }
    let q0 = params.q(0.0);
    let mut pairs: Vec<(f64, f64)> =
        chosen.iter().map(|&(height, x)| ((height / q0).powi(params.p() as i32 - 1), x)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (speeds, positions) = pairs.into_iter().unzip();
    SolitonState::new(speeds, positions).map_err(|e| LabError::GuessFailure(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::soliton_sum;

    fn p(v: u32) -> ModelParams {
        ModelParams::new(v).unwrap()
    }

    #[test]
    fn exact_sum_has_zero_residuals() {
        let g = Grid::new(256.0, 2048).unwrap();
        let s = SolitonState::new(vec![1.0, 2.0], vec![-30.0, 25.0]).unwrap();
        let u = soliton_sum(p(2), &s, &g).unwrap();
        assert!(max_abs(&ortho_residual(&u, &s, p(2))) < 1e-12);
    }

    #[test]
    fn derivative_perturbation_only_moves_the_second_residual() {
        let g = Grid::new(128.0, 2048).unwrap();
        let s = SolitonState::new(vec![1.0], vec![0.0]).unwrap();
        let q = soliton_sum(p(2), &s, &g).unwrap();
        let qx = Field::new(g, sample_soliton(p(2), 1.0, 0.0, &g, 1)).unwrap();
        let u = q.add(&qx.scale(1e-3).unwrap()).unwrap();
        let r = ortho_residual(&u, &s, p(2));
        assert!(r[0].abs() < 1e-14);
        let grad = p(2).constants().gradient;
        assert!((r[1] - 1e-3 * grad).abs() < 1e-12, "{} vs {}", r[1], 1e-3 * grad);
    }

    #[test]
    fn jacobian_diagonal_at_a_single_soliton() {
        let g = Grid::new(128.0, 2048).unwrap();
        let s = SolitonState::new(vec![1.0], vec![3.0]).unwrap();
        let u = soliton_sum(p(2), &s, &g).unwrap();
        let j = ortho_jacobian(&u, &s, p(2), JacobianMode::Analytic);
        assert!((j[(0, 0)] + 4.5).abs() < 1e-6);
        assert!(j[(0, 1)].abs() < 1e-10);
        assert!(j[(1, 0)].abs() < 1e-10);
        assert!((j[(1, 1)] - p(2).constants().gradient).abs() < 1e-9);
    }

    #[test]
    fn guess_inverts_peak_height() {
        let g = Grid::new(128.0, 2048).unwrap();
        let s = SolitonState::new(vec![4.0], vec![10.0]).unwrap();
        let u = soliton_sum(p(2), &s, &g).unwrap();
        let guess = initial_guess(&u, 1, p(2), &GuessOptions::default()).unwrap();
        assert!((guess.speeds()[0] - 4.0).abs() < 1e-6);
        assert!((guess.positions()[0] - 10.0).abs() < 1e-3);
    }

    #[test]
    fn zero_field_has_no_peaks() {
        let g = Grid::new(64.0, 256).unwrap();
        let err = initial_guess(&Field::zeros(g), 1, p(2), &GuessOptions::default()).unwrap_err();
        assert!(matches!(err, LabError::GuessFailure(_)));
    }

    #[test]
    fn separation_wraps_around_the_seam() {
        let g = Grid::new(100.0, 256).unwrap();
        assert!((min_separation(&[-45.0, 45.0], &g) - 10.0).abs() < 1e-12);
        assert_eq!(min_separation(&[0.0], &g), f64::INFINITY);
    }
}
