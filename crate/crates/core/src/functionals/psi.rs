//! The smoothed step `psi(x) = int_{-inf}^x phi`, `phi(x) = c Q(sqrt(sigma0) x / 2)`.
//!
//! With `y = sqrt(sigma0) x / 2` this is `psi = Psi(y) / int Q` where
//! `Psi(y) = int_{-inf}^y Q`. `Psi` is tabulated on `y <= 0` by panelwise
//! Gauss–Kronrod quadrature started from the exponential tail, interpolated
//! with cubic Hermite polynomials using the exact `Q`, and reflected with
//! `Psi(y) = int Q - Psi(-y)`.

use std::sync::{Arc, Mutex, OnceLock};
use std::collections::HashMap;

use crate::error::{LabError, Result};
use crate::profiles::ModelParams;
use crate::quadrature;

const TABLE_EXTENT: f64 = 40.0;
const TABLE_STEP: f64 = 1.0 / 128.0;

#[derive(Debug)]
struct PsiTable {
    /// `Psi(-TABLE_EXTENT + i * TABLE_STEP)` up to `y = 0`.
    values: Vec<f64>,
}

impl PsiTable {
    fn build(params: ModelParams) -> Self {
        let n = (TABLE_EXTENT / TABLE_STEP).round() as usize;
        let mut values = Vec::with_capacity(n + 1);
        let mut acc = tail(params, -TABLE_EXTENT);
        values.push(acc);
        for i in 0..n {
            let a = -TABLE_EXTENT + i as f64 * TABLE_STEP;
            acc += quadrature::integrate(|y| params.q(y), a, a + TABLE_STEP, 1e-18);
            values.push(acc);
        }
        Self { values }
    }

    /// `Psi(y)` for `y <= 0`.
    fn left(&self, params: ModelParams, y: f64) -> f64 {
        if y <= -TABLE_EXTENT {
            return tail(params, y);
        }
        let s = (y + TABLE_EXTENT) / TABLE_STEP;
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let t = s - i as f64;
        let y0 = -TABLE_EXTENT + i as f64 * TABLE_STEP;
        let (f0, f1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (params.q(y0) * TABLE_STEP, params.q(y0 + TABLE_STEP) * TABLE_STEP);
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * f0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * f1
            + (t3 - t2) * d1
    }
}

/// `int_{-inf}^y Q` for very negative `y`, from `Q(y) ~ A e^{y}`.
fn tail(params: ModelParams, y: f64) -> f64 {
    params.tail_prefactor() * y.exp()
}

fn table(params: ModelParams) -> Arc<PsiTable> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<PsiTable>>>> = OnceLock::new();
    let mut cache = CACHE.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    cache.entry(params.p()).or_insert_with(|| Arc::new(PsiTable::build(params))).clone()
}

/// The weight `psi` for a given `sigma0` and nonlinearity.
#[derive(Debug, Clone)]
pub struct PsiWeight {
    params: ModelParams,
    sigma0: f64,
    c_psi: f64,
    table: Arc<PsiTable>,
}

impl PartialEq for PsiWeight {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.sigma0 == other.sigma0
    }
}

impl PsiWeight {
    pub fn new(sigma0: f64, params: ModelParams) -> Result<Self> {
        if !(sigma0.is_finite() && sigma0 > 0.0) {
            return Err(LabError::Parameter(format!("sigma0 must be positive, got {sigma0}")));
        }
        let c_psi = sigma0.sqrt() / (2.0 * params.constants().integral);
        Ok(Self { params, sigma0, c_psi, table: table(params) })
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    /// Normalization `c` making `int phi = 1`.
    pub fn c_psi(&self) -> f64 {
        self.c_psi
    }

    fn scaled(&self, x: f64) -> f64 {
        0.5 * self.sigma0.sqrt() * x
    }

    /// `psi` from the tabulated antiderivative.
    pub fn psi_tabulated(&self, x: f64) -> f64 {
        let y = self.scaled(x);
        let total = self.params.constants().integral;
        if y <= 0.0 {
            self.table.left(self.params, y) / total
        } else {
            1.0 - self.table.left(self.params, -y) / total
        }
    }

    /// `psi` in closed form, where one exists (`p = 2, 3`).
    pub fn psi_closed_form(&self, x: f64) -> Option<f64> {
        let y = self.scaled(x);
        match self.params.p() {
            2 => Some(0.5 * (1.0 + (0.5 * y).tanh())),
            3 => Some(2.0 * y.exp().atan() / std::f64::consts::PI),
            _ => None,
        }
    }

    /// `psi`, `psi'`, `psi''` or `psi'''` at `x`.
    pub fn eval(&self, x: f64, deriv: u32) -> f64 {
        let y = self.scaled(x);
        let k = 0.5 * self.sigma0.sqrt();
        match deriv {
            0 => self.psi_closed_form(x).unwrap_or_else(|| self.psi_tabulated(x)),
            1 => self.c_psi * self.params.q(y),
            2 => self.c_psi * k * self.params.q_deriv(y, 1),
            // psi''' = (sigma0 / 4) (psi' - c Q^p), using Q'' = Q - Q^p
            3 => {
                let q = self.params.q(y);
                let k2 = 0.25 * self.sigma0;
                k2 * (self.c_psi * q) - k2 * (self.c_psi * self.params.pow_p(q))
            }
            _ => panic!("psi derivative of order {deriv} is not provided"),
        }
    }
}

/// `psi`, `psi' = phi` or `psi''' = phi''` at `x`.
pub fn psi_eval(w: &PsiWeight, x: f64, deriv: u32) -> Result<f64> {
    match deriv {
        0 | 1 | 3 => Ok(w.eval(x, deriv)),
        _ => Err(LabError::Parameter(format!("psi derivative order must be 0, 1 or 3, got {deriv}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weight(p: u32, sigma0: f64) -> PsiWeight {
        PsiWeight::new(sigma0, ModelParams::new(p).unwrap()).unwrap()
    }

    #[test]
    fn half_at_origin() {
        for p in 2..=4 {
            let w = weight(p, 0.5);
            assert!((w.psi_tabulated(0.0) - 0.5).abs() < 1e-14);
            assert!((psi_eval(&w, 0.0, 0).unwrap() - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn table_matches_closed_forms() {
        for p in [2, 3] {
            let w = weight(p, 0.37);
            let mut x = -300.0;
            while x <= 300.0 {
                let (a, b) = (w.psi_tabulated(x), w.psi_closed_form(x).unwrap());
                assert!((a - b).abs() < 1e-10, "p={p} x={x}: {a} vs {b}");
                x += 0.0917;
            }
        }
    }

    #[test]
    fn phi_has_unit_mass() {
        for p in 2..=4 {
            let w = weight(p, 0.8);
            let m = quadrature::integrate(|x| w.eval(x, 1), -200.0, 200.0, 1e-14);
            assert!((m - 1.0).abs() < 1e-12, "p={p}: {m}");
        }
    }

    #[test]
    fn tabulated_derivative_is_phi() {
        let w = weight(4, 0.5);
        for x in [-30.0, -3.0, -0.4, 0.7, 5.0, 22.0] {
            let h = 1e-4;
            let fd = (w.psi_tabulated(x + h) - w.psi_tabulated(x - h)) / (2.0 * h);
            assert!((fd - w.eval(x, 1)).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn third_derivative_matches_finite_differences() {
        let w = weight(3, 0.5);
        for x in [-4.0, -1.0, 0.5, 3.0] {
            let h = 1e-3;
            let fd = (w.eval(x + h, 1) - 2.0 * w.eval(x, 1) + w.eval(x - h, 1)) / (h * h);
            assert!((fd - w.eval(x, 3)).abs() < 1e-7, "x={x}");
        }
    }

    #[test]
    fn rejects_even_derivative_orders() {
        assert!(psi_eval(&weight(2, 0.5), 0.0, 2).is_err());
        assert!(PsiWeight::new(0.0, ModelParams::new(2).unwrap()).is_err());
    }
}
