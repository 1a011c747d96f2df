//! CSV tables and the JSON run manifest.

use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::assembly::{DiscreteForm, Grid, Side};
use crate::error::{Error, Result};
use crate::mc::PathEnsemble;

/// First 16 hex digits of `SHA-256(config bytes ‖ seed)`.
pub fn run_id(config: &[u8], seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(config);
    h.update(seed.to_le_bytes());
    hex(&h.finalize())[..16].to_string()
}

/// Full SHA-256 of the config bytes.
pub fn config_hash(config: &[u8]) -> String {
    hex(&Sha256::digest(config))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn side_label(s: Side) -> &'static str {
    match s {
        Side::Minus => "minus",
        Side::Plus => "plus",
    }
}

/// Collects the files written by one run.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn note(&mut self, path: &Path) {
        if !self.written.iter().any(|p| p == path) {
            self.written.push(path.to_path_buf());
        }
    }

    /// Write serializable rows to a fresh CSV file.
    pub fn write_rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf> {
        let path = self.root.join(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::Writer::from_writer(file);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.note(&path);
        Ok(path)
    }

    /// Append rows to a CSV file, writing the header only when it is new.
    pub fn append_rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf> {
        let path = self.root.join(name);
        let fresh = std::fs::metadata(&path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.note(&path);
        Ok(path)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        self.note(&path);
        Ok(path)
    }
}

#[derive(Debug, Serialize)]
pub struct SolutionRow {
    pub index: usize,
    pub x: f64,
    pub side: &'static str,
    pub f: f64,
    pub u: f64,
}

pub fn solution_rows(grid: &Grid, f: &[f64], u: &[f64]) -> Vec<SolutionRow> {
    (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            SolutionRow {
                index: i,
                x: p.x,
                side: side_label(p.side),
                f: f[i],
                u: u[i],
            }
        })
        .collect()
}

/// One named scalar diagnostic.
#[derive(Debug, Serialize)]
pub struct QuantityRow {
    pub quantity: String,
    pub value: f64,
}

impl QuantityRow {
    pub fn new(quantity: impl Into<String>, value: f64) -> Self {
        QuantityRow {
            quantity: quantity.into(),
            value,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FieldSnapshotRow {
    pub t: f64,
    pub x: f64,
    pub side: &'static str,
    pub u: f64,
}

pub fn field_snapshot_rows(grid: &Grid, times: &[f64], states: &[Vec<f64>]) -> Vec<FieldSnapshotRow> {
    let points = grid.points();
    times
        .iter()
        .zip(states)
        .flat_map(|(&t, u)| {
            points.iter().zip(u).map(move |(p, &v)| FieldSnapshotRow {
                t,
                x: p.x,
                side: side_label(p.side),
                u: v,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct EventRow {
    pub path_id: usize,
    pub event_time: f64,
    pub event_kind: crate::mc::EventKind,
    pub side: &'static str,
}

pub fn event_rows(ens: &PathEnsemble) -> Vec<EventRow> {
    ens.paths
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            p.events.iter().map(move |e| EventRow {
                path_id: i,
                event_time: e.time,
                event_kind: e.kind,
                side: side_label(e.side),
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct PathSnapshotRow {
    pub path_id: usize,
    pub t: f64,
    /// `killed` once the path has left through the killing measure.
    pub side: &'static str,
    pub x: Option<f64>,
}

pub fn path_snapshot_rows(ens: &PathEnsemble) -> Vec<PathSnapshotRow> {
    ens.paths
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            ens.snapshot_times
                .iter()
                .zip(&p.snapshots)
                .map(move |(&t, s)| PathSnapshotRow {
                    path_id: i,
                    t,
                    side: s.map_or("killed", |q| side_label(q.side)),
                    x: s.map(|q| q.x),
                })
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct TripletRow {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct MassRow {
    pub index: usize,
    pub x: f64,
    pub side: &'static str,
    pub mass: f64,
    pub killing: f64,
}

pub fn triplet_rows(form: &DiscreteForm) -> Vec<TripletRow> {
    form.triplets()
        .into_iter()
        .map(|(row, col, value)| TripletRow { row, col, value })
        .collect()
}

pub fn mass_rows(form: &DiscreteForm) -> Vec<MassRow> {
    (0..form.len())
        .map(|i| {
            let p = form.grid().point(i);
            MassRow {
                index: i,
                x: p.x,
                side: side_label(p.side),
                mass: form.mass()[i],
                killing: form.killing()[i],
            }
        })
        .collect()
}

/// Machine-readable record of one invocation.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub tool_version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
    pub passed: bool,
}

impl RunManifest {
    pub fn new(run_id: String, command: &str, config: &[u8], seed: u64) -> Self {
        RunManifest {
            run_id,
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_hash: config_hash(config),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
            passed: true,
        }
    }

    pub fn finish(&mut self, out: &OutputDir, elapsed: Duration) -> Result<PathBuf> {
        self.wall_clock_seconds = elapsed.as_secs_f64();
        let path = out.root().join("manifest.json");
        self.outputs = out
            .written()
            .iter()
            .chain(std::iter::once(&path))
            .map(|p| p.display().to_string())
            .collect();
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Numerical(format!("manifest serialization failed: {e}")))?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
