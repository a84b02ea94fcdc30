//! Run reports, time series and their files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use gkdv_core::solver::io::{save_binary, SnapshotContainer};
use gkdv_core::solver::Trajectory;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::fit::LineFit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Criterion {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, value <= threshold, value, threshold, format!("{value:.3e} <= {threshold:.3e}"))
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, value >= threshold, value, threshold, format!("{value:.3e} >= {threshold:.3e}"))
    }

    /// Passes when `value` lies in `[lo, hi]`; `threshold` records `lo`.
    pub fn within(name: &str, value: f64, [lo, hi]: [f64; 2]) -> Self {
        Self::new(name, (lo..=hi).contains(&value), value, lo, format!("{value:.4} in [{lo}, {hi}]"))
    }

    pub fn new(name: &str, passed: bool, value: f64, threshold: f64, detail: String) -> Self {
        Self { name: name.into(), passed, value, threshold, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub name: String,
    #[serde(flatten)]
    pub fit: LineFit,
}

/// A run inside a sweep that did not complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub label: String,
    pub error: String,
}

/// Per-run summary of a sweep member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub label: String,
    pub alpha: f64,
    pub separation: f64,
    pub quantities: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: ExperimentConfig,
    pub quantities: BTreeMap<String, f64>,
    pub vectors: BTreeMap<String, Vec<f64>>,
    pub sweep: Vec<SweepEntry>,
    pub fits: Vec<NamedFit>,
    pub criteria: Vec<Criterion>,
    pub failures: Vec<RunFailure>,
}

impl RunReport {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            command: command.into(),
            config: config.clone(),
            quantities: BTreeMap::new(),
            vectors: BTreeMap::new(),
            sweep: Vec::new(),
            fits: Vec::new(),
            criteria: Vec::new(),
            failures: Vec::new(),
        }
    }

    /// All criteria passed and no run failed.
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.criteria.iter().all(|c| c.passed)
    }

    pub fn criterion(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }

    pub fn fit(&self, name: &str) -> Option<&LineFit> {
        self.fits.iter().find(|f| f.name == name).map(|f| &f.fit)
    }

    pub fn quantity(&self, name: &str) -> Option<f64> {
        self.quantities.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.quantities.insert(name.into(), value);
    }

    pub fn add_fit(&mut self, name: &str, fit: Option<LineFit>) {
        match fit {
            Some(fit) => self.fits.push(NamedFit { name: name.into(), fit }),
            None => self.failures.push(RunFailure { label: name.into(), error: "not enough points to fit".into() }),
        }
    }
}

/// A table of numbers with named columns.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Writes `report.json`, `series.csv` and, when given, `snapshots.bin` into `dir`.
pub fn write_run(dir: &Path, report: &RunReport, series: &Series, snapshots: Option<&Trajectory>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut csv = Vec::new();
    series.write_csv(&mut csv)?;
    fs::write(dir.join("series.csv"), csv)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    if let Some(traj) = snapshots {
        save_binary(&SnapshotContainer::from_trajectory(traj), &dir.join("snapshots.bin"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_rows() {
        let mut s = Series::new(vec!["t".into(), "x".into()]);
        s.push(vec![0.0, 1.5]);
        s.push(vec![0.5, -2.0]);
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "t,x\n0e0,1.5e0\n5e-1,-2e0\n");
        assert_eq!(s.column("x").unwrap(), vec![1.5, -2.0]);
    }

    #[test]
    fn criteria_and_failures_decide_the_outcome() {
        let mut r = RunReport::new("stability", &ExperimentConfig::default());
        r.criteria.push(Criterion::at_most("a", 1.0, 2.0));
        assert!(r.passed());
        r.criteria.push(Criterion::within("b", 3.0, [1.0, 2.0]));
        assert!(!r.passed());
        r.criteria.pop();
        r.add_fit("slope", None);
        assert!(!r.passed());
    }
}
