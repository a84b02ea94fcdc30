//! One simulation: initial data, evolution, tracking and the per-snapshot
//! diagnostics every experiment reports.

use gkdv_core::functionals::{localized_masses, PsiWeight};
use gkdv_core::modulation::{track, TrackOptions, TrackResult, TrackedPoint};
use gkdv_core::profiles::soliton_sum;
use gkdv_core::solver::{conserved, evolve, h1_norm, Trajectory};
use gkdv_core::{Field, Grid, LabError, ModelParams, SolitonState};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::Series;

/// Initial data of a run.
#[derive(Debug, Clone)]
pub struct Setup {
    pub params: ModelParams,
    pub grid: Grid,
    /// The unperturbed solitons, in frame coordinates at `t = 0`.
    pub state0: SolitonState,
    pub u0: Field,
    pub perturbation_h1: f64,
}

impl Setup {
    /// Soliton sum plus the configured perturbation.
    pub fn soliton_sum(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let params = cfg.params()?;
        let grid = cfg.make_grid()?;
        let state0 = cfg.state()?;
        let eps = cfg.perturbation.build(&state0, &grid, cfg.seed)?;
        let u0 = soliton_sum(params, &state0, &grid)?.add(&eps)?;
        Ok(Self { params, grid, state0, u0, perturbation_h1: h1_norm(&eps) })
    }
}

/// One row of diagnostics per decomposed snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub speeds: Vec<f64>,
    pub lab_positions: Vec<f64>,
    pub eps_h1: f64,
    /// `|eps|_{L^2}` over lab `x > fraction * c_1^0 * t`.
    pub eps_right: f64,
    pub i: Vec<f64>,
    pub j_left: f64,
    pub j_right: f64,
    /// `|u - sum_j Q_{c_j^0}(. - x_j(t))|_{H^1}`.
    pub distance: f64,
    /// `sum_j |c_j(t) - c_j^0|`.
    pub speed_drift: f64,
}

#[derive(Debug, Clone)]
pub struct RunData {
    pub setup: Setup,
    pub traj: Trajectory,
    pub tracked: TrackResult,
    pub rows: Vec<Diagnostics>,
    pub psi: PsiWeight,
}

impl RunData {
    pub fn series(&self) -> Series {
        let n = self.setup.state0.len();
        let mut cols = vec!["t".to_string(), "mass_drift".into(), "energy_drift".into()];
        cols.extend((1..=n).map(|j| format!("c_{j}")));
        cols.extend((1..=n).map(|j| format!("x_{j}")));
        cols.extend(["eps_h1".into(), "eps_l2_right".into()]);
        cols.extend((2..=n).map(|j| format!("I_{j}")));
        cols.extend(["J_L".into(), "J_R".into(), "distance".into(), "speed_drift".into()]);
        let mut s = Series::new(cols);
        for r in &self.rows {
            let mut row = vec![r.t, r.mass_drift, r.energy_drift];
            row.extend(&r.speeds);
            row.extend(&r.lab_positions);
            row.extend([r.eps_h1, r.eps_right]);
            row.extend(&r.i);
            row.extend([r.j_left, r.j_right, r.distance, r.speed_drift]);
            s.push(row);
        }
        s
    }

    pub fn points(&self) -> &[TrackedPoint] {
        &self.tracked.points
    }
}

fn relative(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a / b).abs()
    }
}

/// Evolves `setup.u0` and tracks `N` solitons.
pub fn simulate(cfg: &ExperimentConfig, setup: Setup) -> Result<RunData> {
    let opts = cfg.evolve_options();
    let traj = evolve(&setup.u0, cfg.solver.t_final, setup.params, &opts).map_err(LabError::from)?;
    let track_opts = TrackOptions {
        initial: Some(setup.state0.clone()),
        skip_separation: cfg.tracking.skip_separation,
        ..Default::default()
    };
    let tracked = track(&traj, setup.state0.len(), &track_opts);
    if let Some(f) = &tracked.failure {
        return Err(f.error.clone().into());
    }
    let psi = PsiWeight::new(setup.state0.sigma0(), setup.params)?;
    let rows = tracked
        .points
        .iter()
        .map(|pt| diagnostics(cfg, &setup, &traj, &psi, pt))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunData { setup, traj, tracked, rows, psi })
}

fn diagnostics(
    cfg: &ExperimentConfig,
    setup: &Setup,
    traj: &Trajectory,
    psi: &PsiWeight,
    pt: &TrackedPoint,
) -> Result<Diagnostics> {
    let u = &traj.snapshots[pt.index].field;
    let g = setup.grid;
    let c0 = conserved(&traj.snapshots[0].field, setup.params);
    let c = conserved(u, setup.params);
    let dec = &pt.decomposition;
    let v = cfg.solver.frame_velocity;
    let edge = cfg.asymptotic.region_fraction * setup.state0.speeds()[0] * pt.t;
    let h = g.spacing();
    let eps_right = (h * dec
        .epsilon
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| g.x(*i) + v * pt.t > edge)
        .map(|(_, e)| e * e)
        .sum::<f64>())
    .sqrt();
    let rec = localized_masses(u, &dec.state, psi, cfg.monotonicity.y0, cfg.monotonicity.reference - 1, pt.t)?;
    let frozen = SolitonState::new(setup.state0.speeds().to_vec(), dec.state.positions().to_vec())?;
    let distance = h1_norm(&u.sub(&soliton_sum(setup.params, &frozen, &g)?)?);
    let speed_drift = dec.state.speeds().iter().zip(setup.state0.speeds()).map(|(a, b)| (a - b).abs()).sum();
    Ok(Diagnostics {
        t: pt.t,
        mass_drift: relative(c.mass - c0.mass, c0.mass),
        energy_drift: relative(c.energy - c0.energy, c0.energy),
        speeds: dec.state.speeds().to_vec(),
        lab_positions: pt.lab_positions.clone(),
        eps_h1: dec.epsilon_h1(),
        eps_right,
        i: rec.i,
        j_left: rec.j_left,
        j_right: rec.j_right,
        distance,
        speed_drift,
    })
}
