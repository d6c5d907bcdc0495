//! CSV time series, grid snapshots, restart sidecars and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::diagnostics::{DiagnosticsRecord, FieldSnapshot, Origin};
use crate::dynamics::{CoefficientState, Model, Trajectory};
use crate::error::{ChbError, Result};

/// Column names of the snapshot CSV.
pub const SNAPSHOT_COLUMNS: [&str; 10] = ["x", "y", "phi", "mu", "theta", "p", "u_x", "u_y", "q_x", "q_y"];

fn check_path(path: &Path) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(ChbError::InvalidInput("output path is empty".into()));
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    check_path(path)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// 17 significant digits, round-trip exact.
fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

pub fn timeseries_csv(traj: &Trajectory) -> String {
    let mut out = DiagnosticsRecord::COLUMNS.join(",");
    out.push('\n');
    for (_, r) in &traj.records {
        let _ = write!(out, "{}", r.step);
        for v in r.values() {
            out.push(',');
            num(&mut out, v);
        }
        out.push('\n');
    }
    out
}

pub fn write_timeseries(traj: &Trajectory, path: &Path) -> Result<()> {
    write_text(path, &timeseries_csv(traj))
}

pub fn snapshot_csv(snap: &FieldSnapshot) -> String {
    let cols: [&DVector<f64>; 10] =
        [&snap.x, &snap.y, &snap.phi, &snap.mu, &snap.theta, &snap.p, &snap.ux, &snap.uy, &snap.qx, &snap.qy];
    let mut out = SNAPSHOT_COLUMNS.join(",");
    out.push('\n');
    for i in 0..snap.x.len() {
        for (j, c) in cols.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            num(&mut out, c[i]);
        }
        out.push('\n');
    }
    out
}

/// Exact state for restarting a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub step: u64,
    pub t: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub origin: Origin,
    pub record: DiagnosticsRecord,
}

impl Sidecar {
    pub fn new(state: &CoefficientState, record: &DiagnosticsRecord, origin: Origin) -> Sidecar {
        let v = |x: &DVector<f64>| x.iter().copied().collect();
        Sidecar {
            step: state.step,
            t: state.t,
            a: v(&state.a),
            b: v(&state.b),
            c: v(&state.c),
            d: v(&state.d),
            e: v(&state.e),
            origin,
            record: *record,
        }
    }

    pub fn state(&self, k: usize) -> Result<CoefficientState> {
        let v = |x: &Vec<f64>| -> Result<DVector<f64>> {
            if x.len() != k {
                return Err(ChbError::InvalidInput(format!("sidecar has {} coefficients, model has {k}", x.len())));
            }
            Ok(DVector::from_vec(x.clone()))
        };
        Ok(CoefficientState { step: self.step, t: self.t, a: v(&self.a)?, b: v(&self.b)?, c: v(&self.c)?, d: v(&self.d)?, e: v(&self.e)? })
    }

    pub fn to_text(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ChbError::InvalidInput(format!("cannot serialize sidecar: {e}")))
    }

    pub fn from_text(text: &str) -> Result<Sidecar> {
        toml::from_str(text).map_err(|e| ChbError::Config { line: 0, column: 0, message: format!("sidecar: {}", e.message()) })
    }

    pub fn read(path: &Path) -> Result<Sidecar> {
        Sidecar::from_text(&fs::read_to_string(path)?)
    }
}

/// Sidecar path next to a snapshot: `snap.csv` becomes `snap.coeffs`.
pub fn sidecar_path(snapshot: &Path) -> PathBuf {
    snapshot.with_extension("coeffs")
}

/// Writes the grid CSV and its coefficient sidecar; returns the sidecar path.
pub fn write_snapshot(
    model: &Model,
    state: &CoefficientState,
    record: &DiagnosticsRecord,
    origin: Origin,
    path: &Path,
) -> Result<PathBuf> {
    check_path(path)?;
    let snap = FieldSnapshot::from_state(model, state)?;
    write_text(path, &snapshot_csv(&snap))?;
    let side = sidecar_path(path);
    write_text(&side, &Sidecar::new(state, record, origin).to_text()?)?;
    Ok(side)
}

/// What a run produced and how to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub program: String,
    pub version: String,
    pub command: String,
    pub started_unix: f64,
    pub elapsed_seconds: f64,
    pub threads: usize,
    pub completed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub files: Vec<String>,
    /// Fully resolved configuration; a manifest can be passed back to `run`.
    pub config: ModelConfig,
}

impl RunManifest {
    pub fn to_text(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ChbError::InvalidInput(format!("cannot serialize manifest: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_text()?)
    }
}

/// Reads a configuration file, or the configuration echoed in a manifest.
pub fn load_config(text: &str) -> Result<ModelConfig> {
    if let Ok(table) = text.parse::<toml::Table>() {
        if table.contains_key("program") && table.contains_key("config") {
            let m: RunManifest = toml::from_str(text)
                .map_err(|e| ChbError::Config { line: 0, column: 0, message: format!("manifest: {}", e.message()) })?;
            m.config.validate()?;
            return Ok(m.config);
        }
    }
    crate::config::parse_config(text)
}
