use serde::{Deserialize, Serialize};

use super::grid::Field;
use super::stepper::{Sponge, Stepper};
use super::{conserved, ConservedQuantities};
use crate::error::{LabError, Result};
use crate::profiles::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub dt: f64,
    /// Time between stored snapshots; must be a multiple of `dt`.
    pub snapshot_interval: f64,
    /// Velocity of the computational frame. Positions in a snapshot are frame
    /// coordinates; add `frame_velocity * t` for lab coordinates.
    pub frame_velocity: f64,
    pub sponge: Option<Sponge>,
}

impl EvolveOptions {
    pub fn new(dt: f64, snapshot_interval: f64) -> Self {
        Self { dt, snapshot_interval, frame_velocity: 0.0, sponge: None }
    }

    pub fn with_frame_velocity(mut self, v: f64) -> Self {
        self.frame_velocity = v;
        self
    }

    pub fn with_sponge(mut self, sponge: Sponge) -> Self {
        self.sponge = Some(sponge);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: Field,
}

/// Drift of the conserved quantities over the stored snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub initial: ConservedQuantities,
    pub last: ConservedQuantities,
    pub max_relative_mass_drift: f64,
    pub max_relative_energy_drift: f64,
    /// False when a sponge layer removed mass on purpose.
    pub conservative: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: ModelParams,
    pub options: EvolveOptions,
    pub snapshots: Vec<Snapshot>,
    pub conservation: ConservationReport,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory holds the initial snapshot")
    }

    /// Shift from frame to lab coordinates at time `t`.
    pub fn frame_offset(&self, t: f64) -> f64 {
        self.options.frame_velocity * t
    }
}

/// A failed integration together with everything computed before the failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{error}")]
pub struct EvolveFailure {
    pub error: LabError,
    pub partial: Box<Trajectory>,
}

impl From<EvolveFailure> for LabError {
    fn from(f: EvolveFailure) -> Self {
        f.error
    }
}

fn whole_multiple(total: f64, step: f64, what: &str) -> Result<usize> {
    let n = (total / step).round();
    if n < 1.0 || ((n * step - total).abs() > 1e-9 * total.max(1.0)) {
        return Err(LabError::Parameter(format!("{what} {total} is not a multiple of dt = {step}")));
    }
    Ok(n as usize)
}

fn relative(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a / b).abs()
    }
}

/// Integrates from `u0` to `t_final`, storing snapshots at `t = 0` and every
/// `snapshot_interval`.
pub fn evolve(
    u0: &Field,
    t_final: f64,
    params: ModelParams,
    options: &EvolveOptions,
) -> std::result::Result<Trajectory, EvolveFailure> {
    let c0 = conserved(u0, params);
    let mut traj = Trajectory {
        params,
        options: *options,
        snapshots: vec![Snapshot { t: 0.0, field: u0.clone() }],
        conservation: ConservationReport {
            initial: c0,
            last: c0,
            max_relative_mass_drift: 0.0,
            max_relative_energy_drift: 0.0,
            conservative: options.sponge.is_none(),
        },
    };
    let fail = |error: LabError, traj: Trajectory| EvolveFailure { error, partial: Box::new(traj) };

    let setup = (|| {
        if !(t_final > 0.0) {
            return Err(LabError::Parameter(format!("t_final must be positive, got {t_final}")));
        }
        let steps = whole_multiple(t_final, options.dt, "t_final")?;
        let every = whole_multiple(options.snapshot_interval, options.dt, "snapshot interval")?;
        let stepper = Stepper::new(u0, options.dt, params, options.frame_velocity, options.sponge)?;
        Ok((steps, every, stepper))
    })();
    let (steps, every, mut stepper) = match setup {
        Ok(s) => s,
        Err(e) => return Err(fail(e, traj)),
    };

    for n in 1..=steps {
        if stepper.advance().is_err() {
            let last_valid_time = (n - 1) as f64 * options.dt;
            return Err(fail(LabError::Blowup { last_valid_time }, traj));
        }
        if n % every == 0 || n == steps {
            let t = n as f64 * options.dt;
            let field = match stepper.field() {
                Ok(f) => f,
                Err(_) => return Err(fail(LabError::Blowup { last_valid_time: t - options.dt }, traj)),
            };
            let q = conserved(&field, params);
            let rep = &mut traj.conservation;
            rep.last = q;
            rep.max_relative_mass_drift = rep.max_relative_mass_drift.max(relative(q.mass - c0.mass, c0.mass));
            rep.max_relative_energy_drift =
                rep.max_relative_energy_drift.max(relative(q.energy - c0.energy, c0.energy));
            traj.snapshots.push(Snapshot { t, field });
        }
    }
    Ok(traj)
}
