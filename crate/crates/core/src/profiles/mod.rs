//! Soliton profiles of `u_t + (u_xx + u^p)_x = 0` and their integrals.
//!
//! The ground state `Q` is the positive even solution of `Q'' + Q^p = Q`,
//! `Q(x) = ((p+1) / (2 cosh^2((p-1) x / 2)))^{1/(p-1)}`, and the soliton of
//! speed `c` is `Q_c(x) = c^{1/(p-1)} Q(sqrt(c) x)`.

mod tau;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub use tau::{kdv_nsoliton_centers, kdv_nsoliton_profile, kdv_nsoliton_value};

use crate::error::{LabError, Result};
use crate::quadrature;
use crate::solver::{Field, Grid};

/// Relative amplitude a soliton may keep at the periodic seam.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-10;

/// Nonlinearity exponent `p` of the model, restricted to `{2, 3, 4}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct ModelParams {
    p: u32,
}

impl TryFrom<u32> for ModelParams {
    type Error = LabError;
    fn try_from(p: u32) -> Result<Self> {
        Self::new(p)
    }
}

impl From<ModelParams> for u32 {
    fn from(m: ModelParams) -> u32 {
        m.p
    }
}

impl ModelParams {
    pub fn new(p: u32) -> Result<Self> {
        match p {
            2..=4 => Ok(Self { p }),
            _ => Err(LabError::UnsupportedModel(format!(
                "nonlinearity exponent p = {p} is outside {{2, 3, 4}}"
            ))),
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// `beta = 2 / (p - 1)`.
    pub fn beta(&self) -> f64 {
        2.0 / (self.p as f64 - 1.0)
    }

    /// `kappa = (5 - p) / (p + 3)`.
    pub fn kappa(&self) -> f64 {
        (5.0 - self.p as f64) / (self.p as f64 + 3.0)
    }

    /// Exponent of `c` in the soliton mass, `beta - 1/2 = (5 - p) / (2 (p - 1))`.
    pub fn mass_exponent(&self) -> f64 {
        self.beta() - 0.5
    }

    /// Exponent of `c` in the soliton energy, `beta + 1/2`.
    pub fn energy_exponent(&self) -> f64 {
        self.beta() + 0.5
    }

    /// `u^p` by repeated multiplication.
    #[inline]
    pub fn pow_p(&self, u: f64) -> f64 {
        match self.p {
            2 => u * u,
            3 => u * u * u,
            _ => {
                let u2 = u * u;
                u2 * u2
            }
        }
    }

    /// `u^{p-1}` by repeated multiplication.
    #[inline]
    pub fn pow_p_minus_1(&self, u: f64) -> f64 {
        match self.p {
            2 => u,
            3 => u * u,
            _ => u * u * u,
        }
    }

    #[inline]
    fn root_p_minus_1(&self, v: f64) -> f64 {
        match self.p {
            2 => v,
            3 => v.sqrt(),
            _ => v.cbrt(),
        }
    }

    /// Ground state `Q(x)`.
    #[inline]
    pub fn q(&self, x: f64) -> f64 {
        let p = self.p as f64;
        let sech = 1.0 / (0.5 * (p - 1.0) * x).cosh();
        self.root_p_minus_1(0.5 * (p + 1.0) * sech * sech)
    }

    /// `Q`, `Q'` or `Q''` at `x`, using `Q' = -tanh(bx) Q` and
    /// `Q'' = (tanh^2(bx) - b sech^2(bx)) Q` with `b = (p-1)/2`.
    #[inline]
    pub fn q_deriv(&self, x: f64, order: u32) -> f64 {
        let b = 0.5 * (self.p as f64 - 1.0);
        let q = self.q(x);
        match order {
            0 => q,
            1 => -(b * x).tanh() * q,
            _ => {
                let t = (b * x).tanh();
                let sech = 1.0 / (b * x).cosh();
                (t * t - b * sech * sech) * q
            }
        }
    }

    /// `Q_c(x) = c^{1/(p-1)} Q(sqrt(c) x)` and its first two derivatives.
    #[inline]
    pub fn qc(&self, c: f64, x: f64, order: u32) -> f64 {
        let amp = self.root_p_minus_1(c);
        let sc = c.sqrt();
        match order {
            0 => amp * self.q(sc * x),
            1 => amp * sc * self.q_deriv(sc * x, 1),
            _ => amp * c * self.q_deriv(sc * x, 2),
        }
    }

    /// `dQ_c/dc` (`order = 0`) or `d(Q_c)'/dc` (`order = 1`) at `x`:
    /// `(beta Q_c + x Q_c') / (2c)` and `((beta + 1) Q_c' + x Q_c'') / (2c)`.
    #[inline]
    pub fn qc_speed_derivative(&self, c: f64, x: f64, order: u32) -> f64 {
        let beta = self.beta();
        if order == 0 {
            (beta * self.qc(c, x, 0) + x * self.qc(c, x, 1)) / (2.0 * c)
        } else {
            ((beta + 1.0) * self.qc(c, x, 1) + x * self.qc(c, x, 2)) / (2.0 * c)
        }
    }

    /// Asymptotic prefactor `A` in `Q(x) ~ A e^{-|x|}`.
    pub fn tail_prefactor(&self) -> f64 {
        let p = self.p as f64;
        (2.0 * (p + 1.0)).powf(1.0 / (p - 1.0))
    }

    pub fn constants(&self) -> &'static ProfileConstants {
        static CACHE: [OnceLock<ProfileConstants>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
        CACHE[(self.p - 2) as usize].get_or_init(|| ProfileConstants::compute(*self))
    }
}

/// Integrals of the ground state, computed once per `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileConstants {
    /// `int Q^2`
    pub mass: f64,
    /// `int Q`
    pub integral: f64,
    /// `int Q_x^2`
    pub gradient: f64,
}

const QUAD_HALF_WIDTH: f64 = 60.0;

impl ProfileConstants {
    fn compute(params: ModelParams) -> Self {
        let a = params.tail_prefactor();
        let x = QUAD_HALF_WIDTH;
        let integ = |f: &dyn Fn(f64) -> f64| 2.0 * quadrature::integrate(f, 0.0, x, 1e-17);
        // Tails beyond |x| = 60 from Q ~ A e^{-|x|}.
        let mass = integ(&|y| params.q(y).powi(2)) + a * a * (-2.0 * x).exp();
        let integral = integ(&|y| params.q(y)) + 2.0 * a * (-x).exp();
        let gradient = integ(&|y| params.q_deriv(y, 1).powi(2)) + a * a * (-2.0 * x).exp();
        Self { mass, integral, gradient }
    }
}

pub fn eval_q(p: u32, x: f64) -> Result<f64> {
    Ok(ModelParams::new(p)?.q(x))
}

pub fn eval_qc(p: u32, c: f64, x: f64, deriv_order: u32) -> Result<f64> {
    let params = ModelParams::new(p)?;
    check_speed(c)?;
    if deriv_order > 2 {
        return Err(LabError::Parameter(format!("derivative order {deriv_order} not in 0..=2")));
    }
    Ok(params.qc(c, x, deriv_order))
}

fn check_speed(c: f64) -> Result<()> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(LabError::Parameter(format!("soliton speed must be positive, got {c}")))
    }
}

/// `int Q_c^2 = c^{beta - 1/2} int Q^2`.
pub fn soliton_mass(p: u32, c: f64) -> Result<f64> {
    let params = ModelParams::new(p)?;
    check_speed(c)?;
    Ok(c.powf(params.mass_exponent()) * params.constants().mass)
}

/// `E(Q_c) = -(kappa / 2) c^{beta + 1/2} int Q^2`.
pub fn soliton_energy(p: u32, c: f64) -> Result<f64> {
    let params = ModelParams::new(p)?;
    check_speed(c)?;
    Ok(-0.5 * params.kappa() * c.powf(params.energy_exponent()) * params.constants().mass)
}

/// Speeds `c_1 < ... < c_N` and positions `x_j` of N solitons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonState {
    speeds: Vec<f64>,
    positions: Vec<f64>,
}

impl SolitonState {
    pub fn new(speeds: Vec<f64>, positions: Vec<f64>) -> Result<Self> {
        if speeds.is_empty() || speeds.len() != positions.len() {
            return Err(LabError::Parameter(format!(
                "need matching nonempty speeds/positions, got {} and {}",
                speeds.len(),
                positions.len()
            )));
        }
        for &c in &speeds {
            check_speed(c)?;
        }
        if speeds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Parameter(format!("speeds must be strictly increasing: {speeds:?}")));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(LabError::Parameter("positions must be finite".into()));
        }
        Ok(Self { speeds, positions })
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// `sigma_0 = (1/2) min(c_1, c_2 - c_1, ..., c_N - c_{N-1})`.
    pub fn sigma0(&self) -> f64 {
        let gaps = self.speeds.windows(2).map(|w| w[1] - w[0]);
        0.5 * gaps.fold(self.speeds[0], f64::min)
    }

    pub fn translated(&self, dx: f64) -> SolitonState {
        SolitonState {
            speeds: self.speeds.clone(),
            positions: self.positions.iter().map(|x| x + dx).collect(),
        }
    }

    /// Positions after moving each soliton for `dt` at its speed less `frame_velocity`.
    pub fn advanced(&self, dt: f64, frame_velocity: f64) -> SolitonState {
        SolitonState {
            speeds: self.speeds.clone(),
            positions: self
                .positions
                .iter()
                .zip(&self.speeds)
                .map(|(x, c)| x + (c - frame_velocity) * dt)
                .collect(),
        }
    }
}

/// Samples `Q_c(x - x_0)` with the displacement wrapped to the periodic cell.
pub fn sample_soliton(params: ModelParams, c: f64, x0: f64, grid: &Grid, order: u32) -> Vec<f64> {
    (0..grid.n_points())
        .map(|i| params.qc(c, grid.wrap(grid.x(i) - x0), order))
        .collect()
}

/// `sum_j Q_{c_j}(x - x_j)` with the default seam threshold.
pub fn soliton_sum(params: ModelParams, state: &SolitonState, grid: &Grid) -> Result<Field> {
    soliton_sum_with_threshold(params, state, grid, DEFAULT_TAIL_THRESHOLD)
}

/// `sum_j Q_{c_j}(x - x_j)`; fails when any soliton keeps more than
/// `tail_threshold` of its peak amplitude half a period away from its center.
pub fn soliton_sum_with_threshold(
    params: ModelParams,
    state: &SolitonState,
    grid: &Grid,
    tail_threshold: f64,
) -> Result<Field> {
    check_seam(params, state.speeds(), grid, tail_threshold)?;
    let mut values = vec![0.0; grid.n_points()];
    for (&c, &x0) in state.speeds().iter().zip(state.positions()) {
        for (v, s) in values.iter_mut().zip(sample_soliton(params, c, x0, grid, 0)) {
            *v += s;
        }
    }
    Field::new(*grid, values)
}

pub(crate) fn check_seam(params: ModelParams, speeds: &[f64], grid: &Grid, tail_threshold: f64) -> Result<()> {
    let half = 0.5 * grid.domain_length();
    for &c in speeds {
        let ratio = params.q(c.sqrt() * half) / params.q(0.0);
        if ratio > tail_threshold {
            return Err(LabError::DomainTooSmall(format!(
                "soliton of speed {c} keeps relative amplitude {ratio:e} at the seam (threshold {tail_threshold:e})"
            )));
        }
    }
    Ok(())
}
