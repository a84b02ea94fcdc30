//! Numerical laboratory for the subcritical generalized KdV equation
//! `u_t + (u_xx + u^p)_x = 0`, `p in {2, 3, 4}`.
//!
//! - [`profiles`]: solitons `Q_c`, their mass and energy, and the explicit KdV
//!   N-soliton family.
//! - [`solver`]: periodic integrating-factor RK4 integration and conserved
//!   quantities.
//! - [`modulation`]: decomposition `u = sum_j Q_{c_j}(. - x_j) + eps` under the
//!   orthogonality conditions, and tracking along trajectories.
//! - [`functionals`]: localized masses, the linearized energy form and its
//!   constrained spectrum.

pub mod error;
pub mod functionals;
pub mod modulation;
pub mod profiles;
pub mod quadrature;
pub mod solver;

pub use error::{LabError, Result};
pub use profiles::{ModelParams, SolitonState};
pub use solver::{Field, Grid};
