//! Snapshot persistence.
//!
//! Binary container, all fields little-endian:
//!
//! | offset | type      | content                         |
//! |--------|-----------|---------------------------------|
//! | 0      | `[u8; 8]` | magic `GKDVSNP1`                |
//! | 8      | `u32`     | nonlinearity exponent `p`       |
//! | 12     | `u32`     | reserved, zero                  |
//! | 16     | `u64`     | grid points `n`                 |
//! | 24     | `f64`     | domain length `L`               |
//! | 32     | `f64`     | time step `dt`                  |
//! | 40     | `f64`     | snapshot cadence                |
//! | 48     | `f64`     | frame velocity                  |
//! | 56     | `u64`     | snapshot count `m`              |
//! | 64     | records   | `m` times: `t: f64`, `n` × `f64` |

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Field, Grid, Snapshot, Trajectory};
use crate::error::{LabError, Result};
use crate::profiles::ModelParams;

pub const MAGIC: &[u8; 8] = b"GKDVSNP1";

/// Largest grid written by [`write_csv`].
pub const CSV_MAX_POINTS: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotContainer {
    pub params: ModelParams,
    pub grid: Grid,
    pub dt: f64,
    pub snapshot_interval: f64,
    pub frame_velocity: f64,
    pub snapshots: Vec<Snapshot>,
}

impl SnapshotContainer {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        Self {
            params: traj.params,
            grid: *traj.snapshots[0].field.grid(),
            dt: traj.options.dt,
            snapshot_interval: traj.options.snapshot_interval,
            frame_velocity: traj.options.frame_velocity,
            snapshots: traj.snapshots.clone(),
        }
    }
}

pub fn write_binary<W: Write>(container: &SnapshotContainer, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    w.write_all(MAGIC)?;
    w.write_all(&container.params.p().to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    w.write_all(&(container.grid.n_points() as u64).to_le_bytes())?;
    for v in [
        container.grid.domain_length(),
        container.dt,
        container.snapshot_interval,
        container.frame_velocity,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&(container.snapshots.len() as u64).to_le_bytes())?;
    for snap in &container.snapshots {
        w.write_all(&snap.t.to_le_bytes())?;
        for v in snap.field.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| LabError::Format(format!("truncated container: {e}")))?;
    Ok(buf)
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array::<8, _>(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array::<8, _>(r)?))
}

pub fn read_binary<R: Read>(input: R) -> Result<SnapshotContainer> {
    let mut r = BufReader::new(input);
    if &read_array::<8, _>(&mut r)? != MAGIC {
        return Err(LabError::Format("bad magic".into()));
    }
    let p = u32::from_le_bytes(read_array::<4, _>(&mut r)?);
    let _reserved = read_array::<4, _>(&mut r)?;
    let params = ModelParams::new(p)?;
    let n = read_u64(&mut r)? as usize;
    let domain_length = read_f64(&mut r)?;
    let grid = Grid::new(domain_length, n)?;
    let dt = read_f64(&mut r)?;
    let snapshot_interval = read_f64(&mut r)?;
    let frame_velocity = read_f64(&mut r)?;
    let count = read_u64(&mut r)? as usize;
    let mut snapshots = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let t = read_f64(&mut r)?;
        let values = (0..n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        snapshots.push(Snapshot { t, field: Field::new(grid, values)? });
    }
    if r.fill_buf()?.is_empty() {
        Ok(SnapshotContainer { params, grid, dt, snapshot_interval, frame_velocity, snapshots })
    } else {
        Err(LabError::Format("trailing bytes after last snapshot".into()))
    }
}

pub fn save_binary(container: &SnapshotContainer, path: &Path) -> Result<()> {
    write_binary(container, std::fs::File::create(path)?)
}

pub fn load_binary(path: &Path) -> Result<SnapshotContainer> {
    read_binary(std::fs::File::open(path)?)
}

/// Long-format CSV `t,x,u`, one row per grid point and snapshot.
pub fn write_csv<W: Write>(snapshots: &[Snapshot], out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    if let Some(first) = snapshots.first() {
        let n = first.field.grid().n_points();
        if n > CSV_MAX_POINTS {
            return Err(LabError::Parameter(format!(
                "CSV export is limited to {CSV_MAX_POINTS} points, grid has {n}"
            )));
        }
    }
    writeln!(w, "t,x,u")?;
    for snap in snapshots {
        let g = snap.field.grid();
        for (i, v) in snap.field.values().iter().enumerate() {
            writeln!(w, "{},{},{}", snap.t, g.x(i), v)?;
        }
    }
    w.flush()?;
    Ok(())
}
