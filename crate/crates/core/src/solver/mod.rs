//! Periodic pseudospectral integration of `u_t + (u_xx + u^p)_x = 0`.

mod evolve;
mod grid;
pub mod io;
mod spectral;
mod stepper;

use serde::{Deserialize, Serialize};

pub use evolve::{evolve, ConservationReport, EvolveFailure, EvolveOptions, Snapshot, Trajectory};
pub use grid::{Field, Grid, MIN_POINTS, RESOLUTION_FACTOR};
pub use spectral::{h1_norm, spectral_derivative, Spectral};
pub use stepper::{step, step_bound, Sponge, Stepper, C_STAB};

use crate::profiles::ModelParams;

/// Mass `int u^2` and energy `int u_x^2 / 2 - u^{p+1} / (p+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedQuantities {
    pub mass: f64,
    pub energy: f64,
}

pub fn conserved(u: &Field, params: ModelParams) -> ConservedQuantities {
    let spec = Spectral::for_grid(u.grid());
    let ux = spec.derivative(u.values(), 1);
    let h = u.grid().spacing();
    let inv = 1.0 / (params.p() as f64 + 1.0);
    let mut mass = 0.0;
    let mut energy = 0.0;
    for (&v, &dv) in u.values().iter().zip(&ux) {
        mass += v * v;
        energy += 0.5 * dv * dv - inv * v * params.pow_p(v);
    }
    ConservedQuantities { mass: h * mass, energy: h * energy }
}
