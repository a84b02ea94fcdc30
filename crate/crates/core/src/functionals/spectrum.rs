//! Spectrum of `A = -d_xx - p R^{p-1} + c(x)` relative to the `H^1` inner
//! product, optionally restricted to the `L^2`-orthogonal complement of
//! `{R_j, (R_j)_x}`.
//!
//! With `B = 1 - d_xx` and the circulant `S = B^{-1/2}`, the pencil
//! `A v = lambda B v` becomes the symmetric problem `S A S w = lambda w`,
//! `v = S w`. The constraint `<f, v> = 0` reads `<S f, w> = 0`, so the
//! constrained problem is the compression of `S A S` to the complement of
//! `span{S R_j, S (R_j)_x}`; that span is pushed to a large shift.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use super::{linearized_potential, speed_weight, PsiWeight};
use crate::error::{LabError, Result};
use crate::profiles::{sample_soliton, ModelParams, SolitonState};
use crate::solver::{Field, Grid, Spectral};

/// Number of leading eigenvalues kept in a [`Spectrum`].
const KEPT: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub lambda_min: f64,
    /// Minimizer, normalized to unit `H^1` norm.
    pub eigenvector: Field,
    /// The smallest eigenvalues in increasing order.
    pub smallest: Vec<f64>,
    /// `|S A S w - lambda w|` for the returned eigenpair.
    pub residual: f64,
    pub constrained: bool,
}

/// Record of a constrained positivity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCertificate {
    pub p: u32,
    #[serde(rename = "N")]
    pub n: usize,
    pub speeds: Vec<f64>,
    pub separations: Vec<f64>,
    pub lambda_min: f64,
    pub grid: Grid,
    pub tolerance: f64,
}

impl SpectralCertificate {
    pub fn new(params: ModelParams, state: &SolitonState, grid: Grid, spectrum: &Spectrum) -> Self {
        Self {
            p: params.p(),
            n: state.len(),
            speeds: state.speeds().to_vec(),
            separations: state.positions().windows(2).map(|w| w[1] - w[0]).collect(),
            lambda_min: spectrum.lambda_min,
            grid,
            tolerance: spectrum.residual,
        }
    }

    /// Positive beyond the eigenpair residual.
    pub fn certifies(&self) -> bool {
        self.lambda_min > self.tolerance
    }
}

fn circulant(spec: &Spectral, symbol: impl Fn(f64) -> f64) -> Mat<f64> {
    let n = spec.grid().n_points();
    let mut delta = vec![0.0; n];
    delta[0] = 1.0;
    let col = spec.apply_multiplier(&delta, symbol);
    Mat::from_fn(n, n, |i, j| col[(i + n - j) % n])
}

fn smoothing(k: f64) -> f64 {
    1.0 / (1.0 + k * k).sqrt()
}

fn operator(state: &SolitonState, w: &PsiWeight, params: ModelParams, grid: &Grid) -> (Mat<f64>, f64) {
    let spec = Spectral::for_grid(grid);
    let n = grid.n_points();
    let pot = linearized_potential(state, params, grid);
    let cw = speed_weight(state, w, grid);
    let v: Vec<f64> = cw.iter().zip(&pot).map(|(c, q)| c - q).collect();
    let s = circulant(&spec, smoothing);
    let sv = Mat::from_fn(n, n, |i, l| s[(i, l)] * v[l]);
    let m = &sv * &s + circulant(&spec, |k| k * k / (1.0 + k * k));
    let vmax = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    // symmetrize away round-off
    let m = Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    (m, vmax)
}

/// Orthonormal basis of `S f` over the constraint functions.
fn constraint_basis(state: &SolitonState, params: ModelParams, grid: &Grid) -> Result<Mat<f64>> {
    let spec = Spectral::for_grid(grid);
    let n = grid.n_points();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for (&c, &x0) in state.speeds().iter().zip(state.positions()) {
        for order in 0..2 {
            let mut g = spec.apply_multiplier(&sample_soliton(params, c, x0, grid, order), smoothing);
            let scale = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            // modified Gram-Schmidt, twice
            for _ in 0..2 {
                for b in &basis {
                    let d: f64 = g.iter().zip(b).map(|(x, y)| x * y).sum();
                    g.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
                }
            }
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= 1e-10 * scale {
                return Err(LabError::DegenerateConfiguration("constraint functions are dependent".into()));
            }
            g.iter_mut().for_each(|v| *v /= norm);
            basis.push(g);
        }
    }
    Ok(Mat::from_fn(n, basis.len(), |i, j| basis[j][i]))
}

fn solve(m: &Mat<f64>, grid: &Grid, constrained: bool) -> Result<Spectrum> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| LabError::SpectralFailure(format!("{e:?}")))?;
    let vals = evd.S().column_vector();
    let u = evd.U();
    let n = grid.n_points();
    let lambda_min = vals[0];
    let smallest: Vec<f64> = (0..KEPT.min(n)).map(|i| vals[i]).collect();
    let wv: Vec<f64> = (0..n).map(|i| u[(i, 0)]).collect();
    let wm = Mat::from_fn(n, 1, |i, _| wv[i]);
    let mw = m * &wm;
    let residual = (0..n).map(|i| (mw[(i, 0)] - lambda_min * wv[i]).powi(2)).sum::<f64>().sqrt();
    if !(lambda_min.is_finite() && residual.is_finite()) {
        return Err(LabError::SpectralFailure("non-finite eigenpair".into()));
    }
    let spec = Spectral::for_grid(grid);
    // |v|_{H^1}^2 = h |w|^2
    let scale = 1.0 / grid.spacing().sqrt();
    let v: Vec<f64> = spec.apply_multiplier(&wv, smoothing).iter().map(|x| x * scale).collect();
    Ok(Spectrum { lambda_min, eigenvector: Field::new(*grid, v)?, smallest, residual, constrained })
}

/// Smallest `H^1`-relative eigenvalue of the operator on the whole grid.
pub fn unconstrained_spectrum(
    state: &SolitonState,
    w: &PsiWeight,
    params: ModelParams,
    grid: &Grid,
) -> Result<Spectrum> {
    let (m, _) = operator(state, w, params, grid);
    solve(&m, grid, false)
}

/// Smallest `H^1`-relative eigenvalue on the functions `L^2`-orthogonal to
/// every `R_j` and `(R_j)_x`.
pub fn constrained_spectrum(
    state: &SolitonState,
    w: &PsiWeight,
    params: ModelParams,
    grid: &Grid,
) -> Result<Spectrum> {
    let (m, vmax) = operator(state, w, params, grid);
    let h = constraint_basis(state, params, grid)?;
    // P M P + shift H H^T with P = I - H H^T
    let mh = &m * &h;
    let hmh = h.transpose() * &mh;
    let shift = 10.0 * (1.0 + vmax);
    let n = grid.n_points();
    let k = h.ncols();
    let h_hmh = &h * &hmh;
    let mut out = m;
    for j in 0..n {
        for i in 0..n {
            let mut acc = 0.0;
            for a in 0..k {
                acc += -h[(i, a)] * mh[(j, a)] - mh[(i, a)] * h[(j, a)] + (h_hmh[(i, a)] + shift * h[(i, a)]) * h[(j, a)];
            }
            out[(i, j)] += acc;
        }
    }
    solve(&out, grid, true)
}
