//! Diagnostic functionals: the weight `psi`, localized masses, the partial
//! sums `d_j`, the linearized energy form and its constrained spectrum.

mod psi;
mod spectrum;

use serde::{Deserialize, Serialize};

pub use psi::{psi_eval, PsiWeight};
pub use spectrum::{constrained_spectrum, unconstrained_spectrum, SpectralCertificate, Spectrum};

use crate::error::{LabError, Result};
use crate::profiles::{sample_soliton, soliton_energy, ModelParams, SolitonState};
use crate::solver::{conserved, Field, Grid, Spectral};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizedMassRecord {
    pub t: f64,
    /// `I_j` for `j = 2..=N`.
    pub i: Vec<f64>,
    /// `m_j = (x_{j-1} + x_j) / 2` for `j = 2..=N`.
    pub midpoints: Vec<f64>,
    pub j_left: f64,
    pub j_right: f64,
    pub y0: f64,
    /// Zero-based index of the soliton `J_L` and `J_R` are centered on.
    pub reference: usize,
}

fn weighted_mass(u: &Field, weight: impl Fn(f64) -> f64) -> f64 {
    let g = u.grid();
    g.spacing() * u.values().iter().enumerate().map(|(i, v)| v * v * weight(g.x(i))).sum::<f64>()
}

/// `I_j = int u^2 psi(x - m_j)`, `J_L = int (1 - psi(x - (x_k - y0))) u^2` and
/// `J_R = int psi(x - (x_k + y0)) u^2` with `k = reference`. The weight is
/// placed on the periodic cell by wrapping `x - m`.
pub fn localized_masses(
    u: &Field,
    state: &SolitonState,
    w: &PsiWeight,
    y0: f64,
    reference: usize,
    t: f64,
) -> Result<LocalizedMassRecord> {
    if reference >= state.len() {
        return Err(LabError::Parameter(format!("reference soliton {reference} out of range")));
    }
    let g = *u.grid();
    let x = state.positions();
    let midpoints: Vec<f64> = x.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    let i = midpoints.iter().map(|&m| weighted_mass(u, |s| w.eval(g.wrap(s - m), 0))).collect();
    let xl = x[reference] - y0;
    let xr = x[reference] + y0;
    let j_left = weighted_mass(u, |s| 1.0 - w.eval(g.wrap(s - xl), 0));
    let j_right = weighted_mass(u, |s| w.eval(g.wrap(s - xr), 0));
    Ok(LocalizedMassRecord { t, i, midpoints, j_left, j_right, y0, reference })
}

/// Right-hand side of `dI/dt = int (-3 u_x^2 - mdot u^2 + 2p/(p+1) u^{p+1}) psi'
/// + u^2 psi'''` with `psi` centered at `m`.
pub fn mass_flux(u: &Field, w: &PsiWeight, m: f64, mdot: f64, params: ModelParams) -> f64 {
    mass_flux_terms(u, w, m, mdot, params).iter().sum()
}

/// The four integrals of [`mass_flux`] separately, in the order written there.
pub fn mass_flux_terms(u: &Field, w: &PsiWeight, m: f64, mdot: f64, params: ModelParams) -> [f64; 4] {
    let g = *u.grid();
    let spec = Spectral::for_grid(&g);
    let ux = spec.derivative(u.values(), 1);
    let pf = params.p() as f64;
    let coef = 2.0 * pf / (pf + 1.0);
    let mut terms = [0.0; 4];
    for (i, (&v, &d)) in u.values().iter().zip(&ux).enumerate() {
        let s = g.wrap(g.x(i) - m);
        let (w1, w3) = (w.eval(s, 1), w.eval(s, 3));
        terms[0] -= 3.0 * d * d * w1;
        terms[1] -= mdot * v * v * w1;
        terms[2] += coef * v * params.pow_p(v) * w1;
        terms[3] += v * v * w3;
    }
    terms.map(|t| t * g.spacing())
}

/// `d_j = sum_{k >= j} c_k^{beta - 1/2}`.
pub fn dj_sums(state: &SolitonState, params: ModelParams) -> Vec<f64> {
    let e = params.mass_exponent();
    let mut d: Vec<f64> = state.speeds().iter().map(|c| c.powf(e)).collect();
    for j in (0..d.len().saturating_sub(1)).rev() {
        d[j] += d[j + 1];
    }
    d
}

/// `c_1(0) (d_1(t) - d_1(0)) + sum_{j >= 2} (c_j(0) - c_{j-1}(0)) (d_j(t) - d_j(0))`.
pub fn abel_combination(now: &SolitonState, reference: &SolitonState, params: ModelParams) -> Result<f64> {
    if now.len() != reference.len() {
        return Err(LabError::Parameter("states have different soliton counts".into()));
    }
    let (d, d0) = (dj_sums(now, params), dj_sums(reference, params));
    let c0 = reference.speeds();
    Ok((0..d.len())
        .map(|j| {
            let weight = if j == 0 { c0[0] } else { c0[j] - c0[j - 1] };
            weight * (d[j] - d0[j])
        })
        .sum())
}

/// `c(x) = c_1 + sum_{j >= 2} (c_j - c_{j-1}) psi(x - m_j)` on the grid.
pub fn speed_weight(state: &SolitonState, w: &PsiWeight, grid: &Grid) -> Vec<f64> {
    let c = state.speeds();
    let x = state.positions();
    (0..grid.n_points())
        .map(|i| {
            let xi = grid.x(i);
            c[0] + (1..c.len())
                .map(|j| (c[j] - c[j - 1]) * w.eval(grid.wrap(xi - 0.5 * (x[j - 1] + x[j])), 0))
                .sum::<f64>()
        })
        .collect()
}

/// `p R^{p-1}` with `R = sum_j R_j`.
pub fn linearized_potential(state: &SolitonState, params: ModelParams, grid: &Grid) -> Vec<f64> {
    let mut r = vec![0.0; grid.n_points()];
    for (&c, &x0) in state.speeds().iter().zip(state.positions()) {
        for (v, s) in r.iter_mut().zip(sample_soliton(params, c, x0, grid, 0)) {
            *v += s;
        }
    }
    r.iter().map(|&v| params.p() as f64 * params.pow_p_minus_1(v)).collect()
}

/// Bilinear form `int f_x g_x - p R^{p-1} f g + c(x) f g`.
pub fn bilinear_form(f: &Field, g: &Field, state: &SolitonState, w: &PsiWeight, params: ModelParams) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(LabError::Grid("fields on different grids".into()));
    }
    let grid = *f.grid();
    let spec = Spectral::for_grid(&grid);
    let (fx, gx) = (spec.derivative(f.values(), 1), spec.derivative(g.values(), 1));
    let pot = linearized_potential(state, params, &grid);
    let cw = speed_weight(state, w, &grid);
    let s: f64 = (0..grid.n_points())
        .map(|i| fx[i] * gx[i] + (cw[i] - pot[i]) * f.values()[i] * g.values()[i])
        .sum();
    Ok(grid.spacing() * s)
}

/// `int eps_x^2 - p R^{p-1} eps^2 + c(x) eps^2`.
pub fn quadratic_form(eps: &Field, state: &SolitonState, w: &PsiWeight, params: ModelParams) -> Result<f64> {
    bilinear_form(eps, eps, state, w, params)
}

/// `int eps_x^2 - p R^{p-1} eps^2`, the second variation of the energy at `R`.
pub fn energy_hessian_form(eps: &Field, state: &SolitonState, params: ModelParams) -> f64 {
    let grid = *eps.grid();
    let spec = Spectral::for_grid(&grid);
    let ex = spec.derivative(eps.values(), 1);
    let pot = linearized_potential(state, params, &grid);
    let s: f64 = (0..grid.n_points()).map(|i| ex[i] * ex[i] - pot[i] * eps.values()[i].powi(2)).sum();
    grid.spacing() * s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyExpansion {
    /// `sum_j [E(R_j(t)) - E(R_j(0))] + (1/2) int (eps_x^2 - p R^{p-1} eps^2)(t)`.
    pub lhs: f64,
    /// `E(u(t)) - sum_j E(R_j(t)) - (1/2) int (eps_x^2 - p R^{p-1} eps^2)(t)`:
    /// the cubic and interaction remainder of the expansion at time `t`.
    pub defect: f64,
}

/// Energy expansion around the decomposition `(state, eps)` of `u`, relative
/// to the reference state at `t = 0`.
pub fn energy_expansion_residual(
    u: &Field,
    state: &SolitonState,
    eps: &Field,
    reference: &SolitonState,
    params: ModelParams,
) -> Result<EnergyExpansion> {
    if state.len() != reference.len() {
        return Err(LabError::Parameter("states have different soliton counts".into()));
    }
    let energies = |s: &SolitonState| -> Result<f64> {
        s.speeds().iter().map(|&c| soliton_energy(params.p(), c)).sum()
    };
    let (e_now, e_ref) = (energies(state)?, energies(reference)?);
    let half_hessian = 0.5 * energy_hessian_form(eps, state, params);
    let e_u = conserved(u, params).energy;
    Ok(EnergyExpansion { lhs: e_now - e_ref + half_hessian, defect: e_u - e_now - half_hessian })
}
