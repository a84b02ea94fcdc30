//! Continuation of the decomposition along a trajectory.

use std::io::Write;

use super::{decompose, initial_guess, min_separation, DecomposeOptions, Decomposition, GuessOptions};
use crate::error::{LabError, Result};
use crate::profiles::SolitonState;
use crate::solver::{Grid, Trajectory};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackOptions {
    pub decompose: DecomposeOptions,
    pub guess: GuessOptions,
    /// State at the first snapshot, in frame coordinates. When absent it is
    /// read off the peaks.
    pub initial: Option<SolitonState>,
    /// Snapshots whose predicted separation falls below this are skipped and
    /// the next decomposable one is reseeded from its peaks.
    pub skip_separation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedPoint {
    /// Index into the trajectory's snapshots.
    pub index: usize,
    pub t: f64,
    /// Positions in frame coordinates.
    pub decomposition: Decomposition,
    pub lab_positions: Vec<f64>,
    /// Finite-difference `dc_j/dt`; NaN when the point has no decomposed neighbor.
    pub speed_rate: Vec<f64>,
    /// Finite-difference `dx_j/dt - c_j` in lab coordinates; NaN as above.
    pub drift: Vec<f64>,
    /// `(int exp(-sqrt(sigma0) |x - x_j| / 2) eps^2)^{1/2}` per soliton.
    pub local_eps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackFailure {
    pub index: usize,
    pub t: f64,
    pub error: LabError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult {
    pub points: Vec<TrackedPoint>,
    /// Snapshot indices skipped because the solitons were too close.
    pub skipped: Vec<usize>,
    pub failure: Option<TrackFailure>,
}

impl TrackResult {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

fn local_eps(dec: &Decomposition, grid: &Grid) -> Vec<f64> {
    let rate = 0.5 * dec.state.sigma0().sqrt();
    let h = grid.spacing();
    let eps = dec.epsilon.values();
    dec.state
        .positions()
        .iter()
        .map(|&xj| {
            let s: f64 = eps
                .iter()
                .enumerate()
                .map(|(i, e)| (-rate * grid.wrap(grid.x(i) - xj).abs()).exp() * e * e)
                .sum();
            (h * s).sqrt()
        })
        .collect()
}

/// The preimage of `x` under wrapping that lies closest to `target`.
fn nearest_preimage(x: f64, target: f64, grid: &Grid) -> f64 {
    target + grid.wrap(x - target)
}

/// Decomposes every snapshot of `traj` into `n` solitons, seeding each from
/// the previous one advanced by its speed.
pub fn track(traj: &Trajectory, n: usize, options: &TrackOptions) -> TrackResult {
    let params = traj.params;
    let v = traj.options.frame_velocity;
    let mut points: Vec<TrackedPoint> = Vec::new();
    let mut skipped = Vec::new();
    let mut failure = None;
    // Last decomposed state and its time.
    let mut anchor: Option<(f64, SolitonState)> = None;
    let mut reseed = true;

    for (index, snap) in traj.snapshots.iter().enumerate() {
        let grid = *snap.field.grid();
        let attempt = (|| -> Result<Option<Decomposition>> {
            let guess = match &anchor {
                None => match &options.initial {
                    Some(s) if index == 0 => s.clone(),
                    _ => initial_guess(&snap.field, n, params, &options.guess)?,
                },
                Some((t0, prev)) => {
                    let predicted = prev.advanced(snap.t - t0, v);
                    if let Some(lmin) = options.skip_separation {
                        if min_separation(predicted.positions(), &grid) < lmin {
                            return Ok(None);
                        }
                    }
                    if reseed {
                        let peaks = initial_guess(&snap.field, n, params, &options.guess)?;
                        let positions = peaks
                            .positions()
                            .iter()
                            .zip(predicted.positions())
                            .map(|(&x, &target)| nearest_preimage(x, target, &grid))
                            .collect();
                        SolitonState::new(peaks.speeds().to_vec(), positions)?
                    } else {
                        predicted
                    }
                }
            };
            decompose(&snap.field, &guess, params, &options.decompose).map(Some)
        })();
        match attempt {
            Ok(Some(dec)) => {
                anchor = Some((snap.t, dec.state.clone()));
                reseed = false;
                let lab_positions = dec.state.positions().iter().map(|x| x + v * snap.t).collect();
                points.push(TrackedPoint {
                    index,
                    t: snap.t,
                    local_eps: local_eps(&dec, &grid),
                    decomposition: dec,
                    lab_positions,
                    speed_rate: vec![f64::NAN; n],
                    drift: vec![f64::NAN; n],
                });
            }
            Ok(None) => {
                skipped.push(index);
                reseed = true;
            }
            Err(error) => {
                failure = Some(TrackFailure { index, t: snap.t, error });
                break;
            }
        }
    }
    fill_rates(&mut points);
    TrackResult { points, skipped, failure }
}

// Differences only within runs of consecutive snapshot indices.
fn fill_rates(points: &mut [TrackedPoint]) {
    let len = points.len();
    for i in 0..len {
        let linked = |a: usize, b: usize| points[b].index == points[a].index + 1;
        let lo = if i > 0 && linked(i - 1, i) { i - 1 } else { i };
        let hi = if i + 1 < len && linked(i, i + 1) { i + 1 } else { i };
        if lo == hi {
            continue;
        }
        let dt = points[hi].t - points[lo].t;
        let n = points[i].lab_positions.len();
        let (a, b) = (&points[lo], &points[hi]);
        let rate: Vec<f64> = (0..n)
            .map(|j| (b.decomposition.state.speeds()[j] - a.decomposition.state.speeds()[j]) / dt)
            .collect();
        let velocity: Vec<f64> = (0..n).map(|j| (b.lab_positions[j] - a.lab_positions[j]) / dt).collect();
        let p = &mut points[i];
        p.drift = velocity.iter().zip(p.decomposition.state.speeds()).map(|(x, c)| x - c).collect();
        p.speed_rate = rate;
    }
}

/// Columns `t, c_1..c_N, x_1..x_N, eps_l2, eps_h1, max_ortho_residual,
/// iterations`, positions in lab coordinates.
pub fn write_decomposition_csv<W: Write>(points: &[TrackedPoint], out: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(out);
    let n = points.first().map_or(0, |p| p.lab_positions.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|j| format!("c_{j}")));
    header.extend((1..=n).map(|j| format!("x_{j}")));
    header.extend(["eps_l2", "eps_h1", "max_ortho_residual", "iterations"].map(String::from));
    writeln!(w, "{}", header.join(","))?;
    for p in points {
        let d = &p.decomposition;
        let mut row = vec![p.t.to_string()];
        row.extend(d.state.speeds().iter().map(f64::to_string));
        row.extend(p.lab_positions.iter().map(f64::to_string));
        row.push(d.epsilon_l2().to_string());
        row.push(d.epsilon_h1().to_string());
        row.push(d.max_residual().to_string());
        row.push(d.newton_iterations.to_string());
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}
