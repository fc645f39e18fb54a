//! JSON run configuration.
//!
//! ```json
//! { "n": 3, "m": 1, "kappa": 1.0, "x": 2.0, "y": 1.0,
//!   "q0": [1.6, 0.9, 0.4], "p0": [0.3, -0.2, 0.1],
//!   "dt": 1e-4, "t_end": 5.0, "sample_every": 500 }
//! ```
//!
//! `k`, `sample_every` default to 1, `seed` to 0; `output_path` is optional.

use std::fs;
use std::path::{Path, PathBuf};

use bcs_core::{Error as CoreError, ModelParams, PhasePoint, SolverConfig, SutherlandModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, ConfigError};

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub m: usize,
    pub kappa: f64,
    pub x: f64,
    pub y: f64,
    pub q0: Vec<f64>,
    pub p0: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one")]
    pub k: usize,
    #[serde(default = "one")]
    pub sample_every: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
}

/// A validated configuration with the objects built from it.
#[derive(Debug, Clone)]
pub struct Experiment {
    /// Where the configuration was read from.
    pub source: PathBuf,
    pub config: RunConfig,
    pub model: SutherlandModel,
    pub phi0: PhasePoint,
    pub solver: SolverConfig,
}

impl RunConfig {
    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            dt: self.dt,
            t_end: self.t_end,
            k: self.k,
            sample_every: self.sample_every,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// 1-based line of the first `"key":` in `text`.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    let mut from = 0;
    while let Some(pos) = text[from..].find(&needle) {
        let start = from + pos;
        let rest = text[start + needle.len()..].trim_start();
        if rest.starts_with(':') {
            return Some(text[..start].matches('\n').count() + 1);
        }
        from = start + needle.len();
    }
    None
}

struct Source<'a> {
    path: &'a str,
    text: &'a str,
}

impl Source<'_> {
    fn at(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            path: self.path.to_string(),
            line: key_line(self.text, key),
            column: None,
            message: format!("{key}: {}", message.into()),
        }
    }
}

fn params_key(e: &CoreError) -> &'static str {
    match e {
        CoreError::InvalidSpeciesSplit { .. } => "m",
        CoreError::InvalidKappa(_) => "kappa",
        CoreError::DegenerateCouplings { .. } => "y",
        CoreError::NonFiniteCoupling { name } => name,
        _ => "n",
    }
}

fn solver_key(s: &SolverConfig) -> &'static str {
    if !(s.dt > 0.0 && s.dt.is_finite()) {
        "dt"
    } else if !(s.t_end >= 0.0 && s.t_end.is_finite()) || s.dt > s.t_end && s.t_end > 0.0 {
        "t_end"
    } else if s.sample_every == 0 {
        "sample_every"
    } else {
        "k"
    }
}

/// Parses and validates a configuration. `path` only labels error messages.
pub fn parse(text: &str, path: &str) -> CliResult<Experiment> {
    let config: RunConfig = serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        let message = match message.rsplit_once(" at line ") {
            Some((head, _)) => head.to_string(),
            None => message,
        };
        ConfigError {
            path: path.to_string(),
            line: Some(e.line()),
            column: Some(e.column()),
            message,
        }
    })?;
    let src = Source { path, text };

    let params = ModelParams::new(config.n, config.m, config.kappa, config.x, config.y)
        .map_err(|e| src.at(params_key(&e), e.to_string()))?;
    for (key, v) in [("q0", &config.q0), ("p0", &config.p0)] {
        if v.len() != config.n {
            return Err(src.at(key, format!("expected {} entries, got {}", config.n, v.len())).into());
        }
    }
    let phi0 = PhasePoint::new(config.q0.clone(), config.p0.clone()).map_err(|e| src.at("p0", e.to_string()))?;
    let model = SutherlandModel::new(params).map_err(|e| src.at("n", e.to_string()))?;
    model.check_state(&phi0).map_err(|e| src.at("q0", e.to_string()))?;

    let solver = config.solver();
    solver.validate().map_err(|e| src.at(solver_key(&solver), e.to_string()))?;
    if config.k > config.n {
        return Err(src.at("k", format!("flow index must lie in 1..={}", config.n)).into());
    }

    Ok(Experiment {
        source: PathBuf::from(path),
        config,
        model,
        phi0,
        solver,
    })
}

pub fn load(path: &Path) -> CliResult<Experiment> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, &path.display().to_string())
}
