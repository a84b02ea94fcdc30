//! Experiment configuration, read from TOML.
//!
//! Every field has a default, so a file only needs the values it changes.
//! Soliton indices in the configuration are 1-based, matching `c_1, ..., c_N`.

use std::path::{Path, PathBuf};

use gkdv_core::solver::{step_bound, EvolveOptions, Sponge};
use gkdv_core::{Grid, ModelParams, SolitonState};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::perturbation::PerturbationSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub p: u32,
    pub speeds: Vec<f64>,
    /// Initial centers, in the same order as `speeds`. For `nsoliton` these
    /// are the phases of the tau function.
    pub positions: Vec<f64>,
    /// Separation `L`; defaults to the smallest gap between `positions`.
    pub separation: Option<f64>,
    pub perturbation: PerturbationSpec,
    pub grid: GridSpec,
    pub solver: SolverSpec,
    pub sweep: SweepSpec,
    pub tracking: TrackingSpec,
    pub monotonicity: MonotonicitySpec,
    pub asymptotic: AsymptoticSpec,
    pub thresholds: Thresholds,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    pub domain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub dt: f64,
    pub t_final: f64,
    /// Time between stored snapshots.
    pub cadence: f64,
    pub frame_velocity: f64,
    pub sponge: bool,
    pub sponge_width: f64,
    pub sponge_strength: f64,
    pub save_snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub alpha: Vec<f64>,
    pub separation: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingSpec {
    /// Skip snapshots whose predicted separation is below this.
    pub skip_separation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonotonicitySpec {
    /// Offset of `J_L`, `J_R` from their soliton.
    pub y0: f64,
    /// Soliton (1-based) that `J_L`, `J_R` follow.
    pub reference: usize,
    /// Step of the sub-evolution used to check `dI/dt`.
    pub identity_dt: f64,
    /// Stencil spacing, in sub-evolution steps.
    pub identity_stride: usize,
    /// Number of snapshots at which the identity is checked.
    pub identity_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticSpec {
    /// Block-averaging window for the rightward `eps` series.
    pub window: f64,
    /// The region is `x > fraction * c_1^0 * t` in lab coordinates.
    pub region_fraction: f64,
}

/// Pass thresholds of the in-run criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Sup-distance must stay below `distance_factor * alpha + distance_floor`.
    pub distance_factor: f64,
    pub distance_floor: f64,
    pub max_mass_increase: f64,
    pub doubling_factor: f64,
    /// Lower bound on the fitted exponent, as a fraction of `sqrt(sigma0)/8`.
    pub exponent_fraction: f64,
    pub identity_relative: f64,
    pub speed_slope: [f64; 2],
    pub eps_slope: [f64; 2],
    /// Drifts at or below this are treated as numerical floor and left out of fits.
    pub fit_floor: f64,
    pub final_fraction: f64,
    pub plateau_std: f64,
    pub speed_return: f64,
    /// Sup-distance floor of the N-soliton comparison.
    pub nsoliton_floor: f64,
    /// Bound on the fitted `K_3` in `max increase <= K_3 exp(-sqrt(sigma0) L / 8)`.
    pub max_k3: f64,
    /// `|eps|` over the rightward region counts as zero below this.
    pub eps_floor: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            p: 2,
            speeds: vec![1.0, 2.0],
            positions: vec![-30.0, 30.0],
            separation: None,
            perturbation: PerturbationSpec::default(),
            grid: GridSpec::default(),
            solver: SolverSpec::default(),
            sweep: SweepSpec::default(),
            tracking: TrackingSpec::default(),
            monotonicity: MonotonicitySpec::default(),
            asymptotic: AsymptoticSpec::default(),
            thresholds: Thresholds::default(),
            seed: 1,
            out: PathBuf::from("runs"),
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: 4096, domain: 512.0 }
    }
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 50.0,
            cadence: 0.5,
            frame_velocity: 1.5,
            sponge: true,
            sponge_width: 0.1,
            sponge_strength: 1.0,
            save_snapshots: false,
        }
    }
}

impl Default for MonotonicitySpec {
    fn default() -> Self {
        Self { y0: 10.0, reference: 1, identity_dt: 1e-3, identity_stride: 10, identity_samples: 3 }
    }
}

impl Default for AsymptoticSpec {
    fn default() -> Self {
        Self { window: 20.0, region_fraction: 0.1 }
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            distance_factor: 10.0,
            distance_floor: 5e-5,
            max_mass_increase: 1e-3,
            doubling_factor: 10.0,
            exponent_fraction: 0.9,
            identity_relative: 1e-5,
            speed_slope: [1.7, 2.3],
            eps_slope: [0.8, 1.2],
            fit_floor: 1e-12,
            final_fraction: 1.0 / 3.0,
            plateau_std: 1e-4,
            speed_return: 1e-4,
            nsoliton_floor: 1e-4,
            max_k3: 100.0,
            eps_floor: 1e-6,
        }
    }
}

/// Command-line values that replace configuration fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub p: Option<u32>,
    pub speeds: Option<Vec<f64>>,
    pub positions: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub grid: Option<usize>,
    pub domain: Option<f64>,
    pub t_final: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = o.p {
            self.p = p;
        }
        if let Some(s) = &o.speeds {
            self.speeds = s.clone();
        }
        if let Some(x) = &o.positions {
            self.positions = x.clone();
        }
        if let Some(a) = o.alpha {
            self.perturbation.alpha = a;
            self.sweep.alpha.clear();
        }
        if let Some(n) = o.grid {
            self.grid.points = n;
        }
        if let Some(d) = o.domain {
            self.grid.domain = d;
        }
        if let Some(t) = o.t_final {
            self.solver.t_final = t;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.p)?)
    }

    pub fn make_grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.grid.domain, self.grid.points)?)
    }

    pub fn state(&self) -> Result<SolitonState> {
        Ok(SolitonState::new(self.speeds.clone(), self.positions.clone())?)
    }

    /// The configured `L`, or the smallest initial gap.
    pub fn separation(&self) -> f64 {
        self.separation.unwrap_or_else(|| {
            self.positions.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
        })
    }

    /// `gamma0 = sqrt(sigma0) / 16`.
    pub fn gamma0(&self) -> Result<f64> {
        Ok(self.state()?.sigma0().sqrt() / 16.0)
    }

    /// The same configuration with equally spaced centers `L` apart, keeping
    /// the mean of the configured positions.
    pub fn with_separation(&self, l: f64) -> Self {
        let n = self.positions.len();
        let mean = self.positions.iter().sum::<f64>() / n.max(1) as f64;
        let mut c = self.clone();
        c.positions = (0..n).map(|j| mean + (j as f64 - 0.5 * (n as f64 - 1.0)) * l).collect();
        c.separation = Some(l);
        c
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        let mut c = self.clone();
        c.perturbation.alpha = alpha;
        c
    }

    /// Amplitudes to run: the sweep if one is given, else the single configured one.
    pub fn alphas(&self) -> Vec<f64> {
        if self.sweep.alpha.is_empty() {
            vec![self.perturbation.alpha]
        } else {
            self.sweep.alpha.clone()
        }
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        let s = &self.solver;
        let opts = EvolveOptions::new(s.dt, s.cadence).with_frame_velocity(s.frame_velocity);
        if s.sponge {
            opts.with_sponge(Sponge { width_fraction: s.sponge_width, strength: s.sponge_strength })
        } else {
            opts
        }
    }

    /// Every check, including the ordered, `L`-separated initial layout.
    pub fn validate(&self) -> Result<()> {
        self.validate_model()?;
        let l = self.separation();
        if self.speeds.len() > 1 && !(l.is_finite() && l > 0.0) {
            return Err(HarnessError::Config(format!("separation must be positive, got {l}")));
        }
        for (j, w) in self.positions.windows(2).enumerate() {
            if w[1] - w[0] < l {
                return Err(HarnessError::Config(format!(
                    "x_{} - x_{} = {} is below the separation L = {l}",
                    j + 2,
                    j + 1,
                    w[1] - w[0]
                )));
            }
        }
        Ok(())
    }

    /// Checks that do not depend on the initial layout.
    pub fn validate_model(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        self.params()?;
        let grid = self.make_grid()?;
        if self.speeds.len() != self.positions.len() {
            return bad(format!("{} speeds but {} positions", self.speeds.len(), self.positions.len()));
        }
        let state = self.state()?;
        let half = 0.5 * grid.domain_length();
        if self.positions.iter().any(|x| x.abs() >= half) {
            return bad(format!("positions must lie inside (-{half}, {half})"));
        }
        self.perturbation.validate(state.len())?;
        let s = &self.solver;
        if !(s.dt > 0.0 && s.t_final > 0.0 && s.cadence > 0.0) {
            return bad("dt, t_final and cadence must be positive".into());
        }
        if s.dt > step_bound(&grid) {
            return bad(format!("dt = {} exceeds the step bound {}", s.dt, step_bound(&grid)));
        }
        if s.sponge && !(s.sponge_width > 0.0 && s.sponge_width < 0.5 && s.sponge_strength > 0.0) {
            return bad("sponge width must lie in (0, 0.5) and its strength be positive".into());
        }
        if self.sweep.alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return bad("sweep amplitudes must be finite and nonnegative".into());
        }
        if self.sweep.separation.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return bad("sweep separations must be positive".into());
        }
        let m = &self.monotonicity;
        if m.reference == 0 || m.reference > state.len() {
            return bad(format!("monotonicity.reference must be in 1..={}", state.len()));
        }
        if !(m.identity_dt > 0.0 && m.identity_stride > 0) {
            return bad("identity_dt and identity_stride must be positive".into());
        }
        if !(self.asymptotic.window > 0.0 && self.asymptotic.region_fraction >= 0.0) {
            return bad("asymptotic window must be positive".into());
        }
        Ok(())
    }

    /// The amplitude sweep needs at least 4 positive points over 1.5 decades,
    /// and `exp(-gamma0 L)` below the smallest `alpha^2`.
    pub fn validate_alpha_sweep(&self) -> Result<()> {
        let pos: Vec<f64> = self.sweep.alpha.iter().copied().filter(|a| *a > 0.0).collect();
        if pos.len() < 4 {
            return Err(HarnessError::Config(format!(
                "amplitude sweep needs at least 4 positive points, got {}",
                pos.len()
            )));
        }
        let (lo, hi) = pos.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        if (hi / lo).log10() < 1.5 {
            return Err(HarnessError::Config(format!(
                "amplitude sweep spans {:.2} decades, at least 1.5 are needed",
                (hi / lo).log10()
            )));
        }
        let tail = (-self.gamma0()? * self.separation()).exp();
        if tail >= lo * lo {
            return Err(HarnessError::Config(format!(
                "exp(-gamma0 L) = {tail:.3e} is not below the smallest alpha^2 = {:.3e}; increase L",
                lo * lo
            )));
        }
        Ok(())
    }
}
