//! Real-to-complex Fourier machinery on a periodic [`Grid`].

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use super::grid::{Field, Grid};
use crate::error::{LabError, Result};

/// FFT plans and wavenumbers for one grid.
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    wavenumbers: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

type PlanKey = (usize, u64);

fn plan_cache() -> &'static Mutex<HashMap<PlanKey, Arc<Spectral>>> {
    static CACHE: OnceLock<Mutex<HashMap<PlanKey, Arc<Spectral>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let n = grid.n_points();
        let mut planner = RealFftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let dk = 2.0 * PI / grid.domain_length();
        let wavenumbers = (0..=n / 2).map(|m| m as f64 * dk).collect();
        Self { grid, forward, inverse, wavenumbers }
    }

    /// Shared plans for `grid`, created on first use.
    pub fn for_grid(grid: &Grid) -> Arc<Spectral> {
        let key = (grid.n_points(), grid.domain_length().to_bits());
        let mut cache = plan_cache().lock().unwrap_or_else(|e| e.into_inner());
        cache.entry(key).or_insert_with(|| Arc::new(Spectral::new(*grid))).clone()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Nonnegative wavenumbers `2 pi m / L`, `m = 0..=n/2`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn n_modes(&self) -> usize {
        self.wavenumbers.len()
    }

    /// Unnormalized forward transform.
    pub fn forward_into(&self, input: &mut [f64], output: &mut [Complex64]) {
        self.forward
            .process(input, output)
            .expect("forward FFT buffers sized from the plan");
    }

    /// Inverse transform including the `1/n` normalization.
    pub fn inverse_into(&self, input: &mut [Complex64], output: &mut [f64]) {
        let n = self.grid.n_points();
        input[0].im = 0.0;
        input[n / 2].im = 0.0;
        self.inverse
            .process(input, output)
            .expect("inverse FFT buffers sized from the plan");
        let scale = 1.0 / n as f64;
        output.iter_mut().for_each(|v| *v *= scale);
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut input = values.to_vec();
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_modes()];
        self.forward_into(&mut input, &mut out);
        out
    }

    pub fn inverse(&self, modes: &[Complex64]) -> Vec<f64> {
        let mut input = modes.to_vec();
        let mut out = vec![0.0; self.grid.n_points()];
        self.inverse_into(&mut input, &mut out);
        out
    }

    /// Applies the real even multiplier `symbol(k)` in Fourier space.
    pub fn apply_multiplier(&self, values: &[f64], symbol: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut modes = self.forward(values);
        for (m, k) in modes.iter_mut().zip(&self.wavenumbers) {
            *m *= symbol(*k);
        }
        self.inverse(&modes)
    }

    /// `d^order/dx^order` of the samples. The Nyquist mode is dropped for odd
    /// orders so the result stays real.
    pub fn derivative(&self, values: &[f64], order: u32) -> Vec<f64> {
        let mut modes = self.forward(values);
        let nyquist = self.n_modes() - 1;
        let i = Complex64::new(0.0, 1.0);
        for (m, (mode, k)) in modes.iter_mut().zip(&self.wavenumbers).enumerate() {
            if order % 2 == 1 && m == nyquist {
                *mode = Complex64::new(0.0, 0.0);
                continue;
            }
            *mode *= (i * *k).powu(order);
        }
        self.inverse(&modes)
    }
}

/// Fourier derivative of order 1, 2 or 3.
pub fn spectral_derivative(f: &Field, order: u32) -> Result<Field> {
    if !(1..=3).contains(&order) {
        return Err(LabError::Parameter(format!("derivative order must be 1..=3, got {order}")));
    }
    let spec = Spectral::for_grid(f.grid());
    Field::new(*f.grid(), spec.derivative(f.values(), order))
}

/// `(int f^2 + f_x^2)^{1/2}` with the derivative taken spectrally.
pub fn h1_norm(f: &Field) -> f64 {
    let spec = Spectral::for_grid(f.grid());
    let fx = spec.derivative(f.values(), 1);
    let h = f.grid().spacing();
    let sum: f64 = f.values().iter().zip(&fx).map(|(a, b)| a * a + b * b).sum();
    (h * sum).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = Grid::new(20.0, 256).unwrap();
        let f = Field::new(g, vec![3.7; 256]).unwrap();
        let d = spectral_derivative(&f, 1).unwrap();
        assert!(d.max_abs() < 1e-13);
    }

    #[test]
    fn sine_is_eigenfunction_of_second_derivative() {
        let l = 40.0;
        let g = Grid::new(l, 512).unwrap();
        let k = 2.0 * PI / l;
        let f = Field::from_fn(g, |x| (k * x).sin()).unwrap();
        let d2 = spectral_derivative(&f, 2).unwrap();
        for (i, v) in d2.values().iter().enumerate() {
            assert!((v + k * k * (k * g.x(i)).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn third_derivative_of_cosine() {
        let l = 2.0 * PI;
        let g = Grid::new(l, 256).unwrap();
        let f = Field::from_fn(g, |x| (3.0 * x).cos()).unwrap();
        let d3 = spectral_derivative(&f, 3).unwrap();
        for (i, v) in d3.values().iter().enumerate() {
            assert!((v - 27.0 * (3.0 * g.x(i)).sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_order_four() {
        let g = Grid::new(20.0, 256).unwrap();
        assert!(spectral_derivative(&Field::zeros(g), 4).is_err());
    }

    #[test]
    fn h1_norm_of_sine() {
        let l = 2.0 * PI;
        let g = Grid::new(l, 256).unwrap();
        let f = Field::from_fn(g, |x| (2.0 * x).sin()).unwrap();
        // int sin^2 = pi, int 4 cos^2 = 4 pi
        assert!((h1_norm(&f) - (5.0 * PI).sqrt()).abs() < 1e-12);
    }
}
