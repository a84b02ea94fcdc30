//! Exact N-soliton solutions of `u_t + (u_xx + u^2)_x = 0`.
//!
//! With wavenumbers `k_j = sqrt(c_j) / 2` the solution is `u = 6 (log tau)_xx`
//! where `tau = det(I + E C E)`, `C_ij = 2 sqrt(k_i k_j) / (k_i + k_j)` and
//! `E = diag(exp(eta_j / 2))`, `eta_j = 2 k_j (x - c_j t - y_j) + delta_j`.
//! The offsets `delta_j` are chosen so that `y_j + c_j t` is the exact center
//! of soliton `j` as `t -> -infinity`, when faster solitons sit to the left.
//! For one soliton this reduces to `Q_c(x - c t - y)`.
//!
//! `(log tau)_xx` is evaluated from the rescaled matrix
//! `N = S^{-2} + F C F` (`S = max(1, E)`, `F = E / S`) so that no entry grows
//! with `|x|`.

use faer::Mat;
use faer::prelude::*;

use super::{DEFAULT_TAIL_THRESHOLD, ModelParams};
use crate::error::{LabError, Result};
use crate::solver::{Field, Grid};

struct TauSystem {
    k: Vec<f64>,
    speeds: Vec<f64>,
    phases: Vec<f64>,
    delta: Vec<f64>,
    cauchy: Vec<Vec<f64>>,
}

fn interaction(ki: f64, kj: f64) -> f64 {
    ((ki - kj) / (ki + kj)).powi(2)
}

impl TauSystem {
    fn new(speeds: &[f64], phases: &[f64]) -> Result<Self> {
        if speeds.is_empty() || speeds.len() != phases.len() {
            return Err(LabError::Parameter("need matching nonempty speeds and phases".into()));
        }
        if speeds.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
            return Err(LabError::Parameter(format!("speeds must be positive: {speeds:?}")));
        }
        for i in 0..speeds.len() {
            for j in 0..i {
                if (speeds[i] - speeds[j]).abs() <= 1e-12 * speeds[i].max(speeds[j]) {
                    return Err(LabError::Parameter(format!("coincident speeds {} and {}", speeds[i], speeds[j])));
                }
            }
        }
        let k: Vec<f64> = speeds.iter().map(|c| 0.5 * c.sqrt()).collect();
        let n = k.len();
        let delta = (0..n)
            .map(|j| -(0..n).filter(|&l| k[l] > k[j]).map(|l| interaction(k[j], k[l]).ln()).sum::<f64>())
            .collect();
        let cauchy = (0..n)
            .map(|i| (0..n).map(|j| 2.0 * (k[i] * k[j]).sqrt() / (k[i] + k[j])).collect())
            .collect();
        Ok(Self { k, speeds: speeds.to_vec(), phases: phases.to_vec(), delta, cauchy })
    }

    fn value(&self, x: f64, t: f64) -> f64 {
        let n = self.k.len();
        let mut log_s = vec![0.0; n];
        let mut f = vec![0.0; n];
        for j in 0..n {
            let half_eta = self.k[j] * (x - self.speeds[j] * t - self.phases[j]) + 0.5 * self.delta[j];
            log_s[j] = half_eta.max(0.0);
            f[j] = (half_eta - log_s[j]).exp();
        }
        let nmat = Mat::<f64>::from_fn(n, n, |i, j| {
            let diag = if i == j { (-2.0 * log_s[i]).exp() } else { 0.0 };
            diag + f[i] * self.cauchy[i][j] * f[j]
        });
        let a1 = Mat::<f64>::from_fn(n, n, |i, j| f[i] * self.cauchy[i][j] * (self.k[i] + self.k[j]) * f[j]);
        let a2 = Mat::<f64>::from_fn(n, n, |i, j| {
            f[i] * self.cauchy[i][j] * (self.k[i] + self.k[j]).powi(2) * f[j]
        });
        let lu = nmat.partial_piv_lu();
        let mut b1 = a1.clone();
        lu.solve_in_place(&mut b1);
        let mut b2 = a2;
        lu.solve_in_place(&mut b2);
        let mut tr2 = 0.0;
        let mut tr11 = 0.0;
        for i in 0..n {
            tr2 += b2[(i, i)];
            for j in 0..n {
                tr11 += b1[(i, j)] * b1[(j, i)];
            }
        }
        6.0 * (tr2 - tr11)
    }

    /// Soliton centers when they are well separated, with each soliton
    /// shifted by its interactions with the solitons currently to its left.
    fn centers(&self, t: f64) -> Vec<f64> {
        let n = self.k.len();
        let naive: Vec<f64> = (0..n).map(|j| self.phases[j] + self.speeds[j] * t).collect();
        // Rank by the naive position; ties do not arise for separated solitons.
        (0..n)
            .map(|j| {
                let left: f64 = (0..n)
                    .filter(|&l| l != j && naive[l] < naive[j])
                    .map(|l| interaction(self.k[j], self.k[l]).ln())
                    .sum();
                naive[j] - (self.delta[j] + left) / (2.0 * self.k[j])
            })
            .collect()
    }
}

/// Point value of the KdV N-soliton at `(x, t)`.
pub fn kdv_nsoliton_value(speeds: &[f64], phases: &[f64], t: f64, x: f64) -> Result<f64> {
    Ok(TauSystem::new(speeds, phases)?.value(x, t))
}

/// Centers of the solitons of the N-soliton at time `t`, valid when they are
/// well separated.
pub fn kdv_nsoliton_centers(speeds: &[f64], phases: &[f64], t: f64) -> Result<Vec<f64>> {
    Ok(TauSystem::new(speeds, phases)?.centers(t))
}

/// Samples the KdV (`p = 2`) N-soliton on `grid` (not wrapped: the solution
/// lives on the line and must have decayed at both ends of the grid).
pub fn kdv_nsoliton_profile(
    params: ModelParams,
    speeds: &[f64],
    phases: &[f64],
    t: f64,
    grid: &Grid,
) -> Result<Field> {
    if params.p() != 2 {
        return Err(LabError::UnsupportedModel(format!(
            "explicit N-soliton profiles exist only for p = 2, got p = {}",
            params.p()
        )));
    }
    let sys = TauSystem::new(speeds, phases)?;
    let values: Vec<f64> = grid.coordinates().into_iter().map(|x| sys.value(x, t)).collect();
    let field = Field::new(*grid, values)?;
    let peak = field.max_abs();
    let edge = field.values()[0].abs().max(field.values()[grid.n_points() - 1].abs());
    if edge > DEFAULT_TAIL_THRESHOLD * peak {
        return Err(LabError::DomainTooSmall(format!(
            "N-soliton keeps relative amplitude {:e} at the grid boundary",
            edge / peak
        )));
    }
    Ok(field)
}
