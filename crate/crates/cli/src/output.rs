//! Trajectory CSV and JSON sidecar files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bcs_core::{conservation_report, SpectralDiagnostics, SutherlandModel, Trajectory};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub fn csv_header(n: usize) -> String {
    let mut cols = vec!["t".to_string()];
    for prefix in ["q", "p", "H"] {
        cols.extend((1..=n).map(|i| format!("{prefix}{i}")));
    }
    cols.join(",")
}

/// 17 significant digits, enough to recover every `f64` exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes one row per sample: `t, q, p, H_1^red … H_n^red`.
pub fn write_csv(path: &Path, model: &SutherlandModel, traj: &Trajectory) -> CliResult<()> {
    let n = model.n();
    let ps = traj
        .ps
        .as_ref()
        .ok_or_else(|| CliError::Usage("trajectory has no momenta".into()))?;
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| CliError::io(path, e);
    writeln!(out, "{}", csv_header(n)).map_err(io)?;
    for (i, &t) in traj.times.iter().enumerate() {
        let phi = bcs_core::PhasePoint {
            q: traj.qs[i].clone(),
            p: ps[i].clone(),
        };
        let hs = model.reduced_hamiltonians(&phi)?;
        let row: Vec<String> = std::iter::once(t)
            .chain(phi.q.iter().copied())
            .chain(phi.p.iter().copied())
            .chain(hs)
            .map(format_float)
            .collect();
        writeln!(out, "{}", row.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEntry {
    pub initial: f64,
    pub absolute: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halt {
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub solver: String,
    pub k: usize,
    pub samples: usize,
    pub t_final: f64,
    pub drift: BTreeMap<String, DriftEntry>,
    pub max_relative_drift: f64,
    pub min_eig_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_relative_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub near_degenerate: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halted: Option<Halt>,
}

impl Sidecar {
    pub fn new(solver: &str, k: usize, model: &SutherlandModel, traj: &Trajectory) -> CliResult<Self> {
        let table = conservation_report(model, traj)?;
        let drift = (0..table.initial.len())
            .map(|i| {
                (
                    format!("H{}", i + 1),
                    DriftEntry {
                        initial: table.initial[i],
                        absolute: table.absolute[i],
                        relative: table.relative[i],
                    },
                )
            })
            .collect();
        let spectral: Option<&SpectralDiagnostics> = traj.spectral.as_ref();
        Ok(Self {
            solver: solver.to_string(),
            k,
            samples: traj.len(),
            t_final: traj.last_time(),
            drift,
            max_relative_drift: table.max_relative(),
            min_eig_gap: spectral.map(|s| s.min_eig_gap),
            min_relative_gap: spectral.map(|s| s.min_relative_gap),
            near_degenerate: spectral.map(|s| s.near_degenerate),
            segments: spectral.map(|s| s.segments),
            halted: None,
        })
    }
}

/// `run.csv` → `run.sidecar.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("sidecar.json")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}
