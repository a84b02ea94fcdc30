use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const MIN_POINTS: usize = 256;

/// Default resolution requirement: `spacing <= RESOLUTION_FACTOR / sqrt(c_max)`.
pub const RESOLUTION_FACTOR: f64 = 0.25;

/// Uniform periodic grid on `[-L/2, L/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    domain_length: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(domain_length: f64, n_points: usize) -> Result<Self> {
        if !(domain_length.is_finite() && domain_length > 0.0) {
            return Err(LabError::Grid(format!("domain length must be positive, got {domain_length}")));
        }
        if n_points < MIN_POINTS || !n_points.is_power_of_two() {
            return Err(LabError::Grid(format!(
                "n_points must be a power of two >= {MIN_POINTS}, got {n_points}"
            )));
        }
        Ok(Self { domain_length, n_points })
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.domain_length / self.n_points as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.domain_length + i as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Maps `x` to its periodic image in `[-L/2, L/2)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.domain_length;
        let shifted = (x + 0.5 * l).rem_euclid(l);
        shifted - 0.5 * l
    }

    /// Checks the resolution requirement for the fastest soliton.
    pub fn check_resolves(&self, c_max: f64, factor: f64) -> Result<()> {
        let bound = factor / c_max.sqrt();
        if self.spacing() > bound {
            return Err(LabError::Grid(format!(
                "spacing {} does not resolve speed {c_max} (need <= {bound})",
                self.spacing()
            )));
        }
        Ok(())
    }
}

/// Real samples on a [`Grid`]. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(LabError::Grid(format!(
                "field has {} samples, grid has {}",
                values.len(),
                grid.n_points()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.n_points()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.coordinates().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Trapezoidal integral, which is spectrally accurate on a periodic grid.
    pub fn integral(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    pub fn inner(&self, other: &Field) -> f64 {
        self.grid.spacing() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        Field::new(self.grid, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Result<Field> {
        self.map(|v| s * v)
    }

    /// Spatial reflection `x -> -x` on the grid (index `i -> (n - i) mod n`).
    pub fn reflect(&self) -> Field {
        let n = self.values.len();
        let values = (0..n).map(|i| self.values[(n - i) % n]).collect();
        Field { grid: self.grid, values }
    }

    /// Periodic shift by an integer number of grid cells to the right.
    pub fn roll(&self, cells: isize) -> Field {
        let n = self.values.len() as isize;
        let values = (0..n).map(|i| self.values[(i - cells).rem_euclid(n) as usize]).collect();
        Field { grid: self.grid, values }
    }
}
