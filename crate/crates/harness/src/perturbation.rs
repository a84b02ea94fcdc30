//! `H^1`-normalized perturbations: a smooth compactly supported bump and a
//! seeded band-limited random field under a Gaussian envelope.

use gkdv_core::solver::{h1_norm, Spectral};
use gkdv_core::{Field, Grid, SolitonState};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    None,
    SmoothBump,
    RandomSeeded,
}

/// Where the perturbation is centered. Soliton indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// On soliton `j`.
    Soliton(usize),
    /// Halfway between solitons `j` and `j + 1`.
    Between(usize),
    /// At an absolute position.
    At(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    /// `H^1` norm of the perturbation.
    pub alpha: f64,
    pub placement: Placement,
    /// Half-width of the bump support, or the envelope width of the random field.
    pub width: f64,
    /// Largest wavenumber in the random field.
    pub bandwidth: f64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self { kind: PerturbationKind::SmoothBump, alpha: 1e-2, placement: Placement::Soliton(1), width: 3.0, bandwidth: 2.0 }
    }
}

impl PerturbationSpec {
    pub fn validate(&self, n_solitons: usize) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad(format!("perturbation amplitude must be finite and nonnegative, got {}", self.alpha));
        }
        if !(self.width > 0.0 && self.bandwidth > 0.0) {
            return bad("perturbation width and bandwidth must be positive".into());
        }
        match self.placement {
            Placement::Soliton(j) if j == 0 || j > n_solitons => bad(format!("no soliton {j}")),
            Placement::Between(j) if j == 0 || j >= n_solitons => bad(format!("no gap after soliton {j}")),
            Placement::At(x) if !x.is_finite() => bad("placement must be finite".into()),
            _ => Ok(()),
        }
    }

    pub fn center(&self, state: &SolitonState) -> f64 {
        let x = state.positions();
        match self.placement {
            Placement::Soliton(j) => x[j - 1],
            Placement::Between(j) => 0.5 * (x[j - 1] + x[j]),
            Placement::At(a) => a,
        }
    }

    /// The perturbation on `grid`, with `H^1` norm `alpha`.
    pub fn build(&self, state: &SolitonState, grid: &Grid, seed: u64) -> Result<Field> {
        self.validate(state.len())?;
        if self.kind == PerturbationKind::None || self.alpha == 0.0 {
            return Ok(Field::zeros(*grid));
        }
        let x0 = self.center(state);
        let shape = match self.kind {
            PerturbationKind::SmoothBump => smooth_bump(grid, x0, self.width)?,
            PerturbationKind::RandomSeeded => random_field(grid, x0, self.width, self.bandwidth, seed)?,
            PerturbationKind::None => unreachable!(),
        };
        let norm = h1_norm(&shape);
        if !(norm > 0.0) {
            return Err(HarnessError::Config("perturbation vanishes on this grid".into()));
        }
        Ok(shape.scale(self.alpha / norm)?)
    }
}

/// `exp(1 - 1 / (1 - r^2))` for `|r| < 1`, `r = (x - x0) / width`.
pub fn smooth_bump(grid: &Grid, x0: f64, width: f64) -> Result<Field> {
    Ok(Field::from_fn(*grid, |x| {
        let r = grid.wrap(x - x0) / width;
        if r.abs() < 1.0 {
            (1.0 - 1.0 / (1.0 - r * r)).exp()
        } else {
            0.0
        }
    })?)
}

/// Random Fourier coefficients on `0 < k <= bandwidth`, multiplied by a
/// Gaussian envelope of the given width around `x0`.
pub fn random_field(grid: &Grid, x0: f64, width: f64, bandwidth: f64, seed: u64) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = Spectral::for_grid(grid);
    let dk = 2.0 * std::f64::consts::PI / grid.domain_length();
    let modes = ((bandwidth / dk).floor() as usize).min(spec.n_modes().saturating_sub(2)).max(1);
    let coeffs: Vec<(f64, f64)> =
        (0..modes).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    Ok(Field::from_fn(*grid, |x| {
        let s = grid.wrap(x - x0);
        let carrier: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(m, (a, b))| {
                let k = (m + 1) as f64 * dk;
                a * (k * s).cos() + b * (k * s).sin()
            })
            .sum();
        carrier * (-(s / width).powi(2)).exp()
    })?)
}
