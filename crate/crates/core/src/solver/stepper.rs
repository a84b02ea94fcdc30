//! Integrating-factor fourth-order Runge–Kutta for
//! `u_t = -u_xxx - (u^p)_x + V u_x - sigma(x) u`.
//!
//! The dispersion `-u_xxx` and the frame drift `V u_x` are diagonal in Fourier
//! space, `Lambda(k) = i (k^3 + V k)`, and are integrated exactly. The flux
//! `-(u^p)_x` is evaluated pseudospectrally with the 2/3 rule, and the optional
//! sponge damping `-sigma u` is treated together with the flux.

use std::f64::consts::PI;
use std::sync::Arc;

use realfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{Field, Grid};
use super::spectral::Spectral;
use crate::error::{LabError, Result};
use crate::profiles::ModelParams;

/// Step-size constant: `dt <= C_STAB * spacing^3`.
pub const C_STAB: f64 = 2.0;

/// Absorbing layer `-sigma(x) u` next to the left (upstream) edge of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sponge {
    /// Width as a fraction of the domain length.
    pub width_fraction: f64,
    /// Peak damping rate.
    pub strength: f64,
}

impl Default for Sponge {
    fn default() -> Self {
        Self { width_fraction: 0.1, strength: 1.0 }
    }
}

impl Sponge {
    /// `sigma(x) = strength * sin^2(pi s)` for `s = (x + L/2) / w` in `[0, 1]`, else 0.
    pub fn profile(&self, grid: &Grid) -> Vec<f64> {
        let width = self.width_fraction * grid.domain_length();
        grid.coordinates()
            .into_iter()
            .map(|x| {
                let s = (x + 0.5 * grid.domain_length()) / width;
                if (0.0..=1.0).contains(&s) {
                    self.strength * (PI * s).sin().powi(2)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Largest admissible time step on `grid`.
pub fn step_bound(grid: &Grid) -> f64 {
    C_STAB * grid.spacing().powi(3)
}

pub struct Stepper {
    params: ModelParams,
    spec: Arc<Spectral>,
    dt: f64,
    half_factor: Vec<Complex64>,
    full_factor: Vec<Complex64>,
    flux_multiplier: Vec<Complex64>,
    sponge: Option<Vec<f64>>,
    modes: Vec<Complex64>,
    // scratch
    stage: Vec<Complex64>,
    k: [Vec<Complex64>; 4],
    cbuf: Vec<Complex64>,
    rbuf: Vec<f64>,
    rbuf2: Vec<f64>,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper").field("params", &self.params).field("dt", &self.dt).finish()
    }
}

impl Stepper {
    pub fn new(
        u0: &Field,
        dt: f64,
        params: ModelParams,
        frame_velocity: f64,
        sponge: Option<Sponge>,
    ) -> Result<Self> {
        let grid = *u0.grid();
        let bound = step_bound(&grid);
        if !(dt > 0.0 && dt <= bound) {
            return Err(LabError::StepSize { dt, bound });
        }
        let spec = Spectral::for_grid(&grid);
        let n_modes = spec.n_modes();
        let n = grid.n_points();
        let cutoff = n / 3;
        let nyquist = n_modes - 1;
        let mut half_factor = Vec::with_capacity(n_modes);
        let mut full_factor = Vec::with_capacity(n_modes);
        let mut flux_multiplier = Vec::with_capacity(n_modes);
        for (m, &k) in spec.wavenumbers().iter().enumerate() {
            let omega = k * k * k + frame_velocity * k;
            let omega = if m == nyquist { 0.0 } else { omega };
            half_factor.push(Complex64::from_polar(1.0, 0.5 * omega * dt));
            full_factor.push(Complex64::from_polar(1.0, omega * dt));
            let keep = m <= cutoff && m != nyquist;
            flux_multiplier.push(if keep { Complex64::new(0.0, -k) } else { Complex64::new(0.0, 0.0) });
        }
        let modes = spec.forward(u0.values());
        let zero = vec![Complex64::new(0.0, 0.0); n_modes];
        Ok(Self {
            params,
            spec,
            dt,
            half_factor,
            full_factor,
            flux_multiplier,
            sponge: sponge.map(|s| s.profile(&grid)),
            modes,
            stage: zero.clone(),
            k: [zero.clone(), zero.clone(), zero.clone(), zero.clone()],
            cbuf: zero,
            rbuf: vec![0.0; n],
            rbuf2: vec![0.0; n],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Nonlinear and damping terms `-ik F[u^p] - F[sigma u]` of the modes in `input`.
    fn rhs(&mut self, which: usize, from_stage: bool) {
        let src = if from_stage { &self.stage } else { &self.modes };
        self.cbuf.copy_from_slice(src);
        self.spec.inverse_into(&mut self.cbuf, &mut self.rbuf);
        let params = self.params;
        if let Some(sigma) = &self.sponge {
            for ((w, u), s) in self.rbuf2.iter_mut().zip(&self.rbuf).zip(sigma) {
                *w = s * u;
            }
        }
        for u in self.rbuf.iter_mut() {
            *u = params.pow_p(*u);
        }
        let out = &mut self.k[which];
        self.spec.forward_into(&mut self.rbuf, out);
        for (o, m) in out.iter_mut().zip(&self.flux_multiplier) {
            *o *= m;
        }
        if self.sponge.is_some() {
            self.spec.forward_into(&mut self.rbuf2, &mut self.cbuf);
            for (o, d) in out.iter_mut().zip(&self.cbuf) {
                *o -= d;
            }
        }
    }

    /// Advances one step; on a non-finite result the state is left untouched.
    pub fn advance(&mut self) -> Result<()> {
        let dt = self.dt;
        let h = 0.5 * dt;
        self.rhs(0, false);
        for m in 0..self.modes.len() {
            self.stage[m] = self.half_factor[m] * (self.modes[m] + h * self.k[0][m]);
        }
        self.rhs(1, true);
        for m in 0..self.modes.len() {
            self.stage[m] = self.half_factor[m] * self.modes[m] + h * self.k[1][m];
        }
        self.rhs(2, true);
        for m in 0..self.modes.len() {
            self.stage[m] = self.full_factor[m] * self.modes[m] + dt * self.half_factor[m] * self.k[2][m];
        }
        self.rhs(3, true);
        let mut finite = true;
        for m in 0..self.modes.len() {
            let e1 = self.half_factor[m];
            let e2 = self.full_factor[m];
            let next = e2 * self.modes[m]
                + (dt / 6.0) * (e2 * self.k[0][m] + 2.0 * e1 * (self.k[1][m] + self.k[2][m]) + self.k[3][m]);
            finite &= next.re.is_finite() && next.im.is_finite();
            self.stage[m] = next;
        }
        if !finite {
            return Err(LabError::Blowup { last_valid_time: f64::NAN });
        }
        std::mem::swap(&mut self.modes, &mut self.stage);
        Ok(())
    }

    pub fn field(&self) -> Result<Field> {
        Field::new(*self.spec.grid(), self.spec.inverse(&self.modes))
    }
}

/// One integrating-factor RK4 step of `u_t + (u_xx + u^p)_x = 0`.
pub fn step(u: &Field, dt: f64, params: ModelParams) -> Result<Field> {
    let mut stepper = Stepper::new(u, dt, params, 0.0, None)?;
    stepper.advance().map_err(|_| LabError::Blowup { last_valid_time: 0.0 })?;
    stepper.field()
}
