//! The `bcs` subcommands. Each returns `Ok(true)` on success and `Ok(false)`
//! on a tolerance breach; errors map to exit codes through
//! [`CliError::exit_code`].

use std::io::Write;
use std::path::{Path, PathBuf};

use bcs_core::dynamics::{
    integrate_ode, involution_matrix, reconstruct_p, spectral_solve, spectral_solve_q, SegmentOptions,
};
use bcs_core::lie;
use bcs_core::sampling::random_phase_point;
use bcs_core::{Complex64, Error as CoreError, PhasePoint, Trajectory};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Experiment;
use crate::error::{CliError, CliResult};
use crate::output::{self, Halt, Sidecar};

pub const CHECK_TOLERANCE: f64 = 1e-9;
pub const COMPARE_TOLERANCE: f64 = 1e-6;
pub const INVOLUTION_TOLERANCE: f64 = 1e-6;
/// Finite-difference step of the bracket matrix.
pub const BRACKET_STEP: f64 = 1e-5;
/// Size of the entry added to `J` by `--corrupt-lax`.
pub const LAX_CORRUPTION: f64 = 1e-3;

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub output: Option<PathBuf>,
    pub tolerance: Option<f64>,
    pub samples: usize,
    pub corrupt_lax: bool,
    pub direct: bool,
}

impl Options {
    fn output_path(&self, exp: &Experiment) -> CliResult<Option<PathBuf>> {
        let path = self.output.clone().or_else(|| exp.config.output_path.clone());
        if let Some(p) = &path {
            for target in [p.clone(), output::sidecar_path(p)] {
                if same_file(&target, &exp.source) {
                    return Err(CliError::Usage(format!(
                        "refusing to overwrite the configuration file {}",
                        exp.source.display()
                    )));
                }
            }
        }
        Ok(path)
    }

    fn require_output(&self, exp: &Experiment) -> CliResult<PathBuf> {
        self.output_path(exp)?
            .ok_or_else(|| CliError::Usage("no output file: pass --output or set output_path".into()))
    }

    fn tolerance(&self, default: f64) -> CliResult<f64> {
        match self.tolerance {
            Some(t) if !(t >= 0.0 && t.is_finite()) => {
                Err(CliError::Usage(format!("tolerance must be non-negative (got {t})")))
            }
            Some(t) => Ok(t),
            None => Ok(default),
        }
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn info(exp: &Experiment, out: &mut dyn Write) -> CliResult<bool> {
    let p = exp.model.params();
    let q = &exp.phi0.q;
    let (n, m) = (p.n(), p.m());
    let lines = [
        format!("n = {n}, m = {m} (species sizes {m} and {})", n - m),
        format!("kappa = {}, x = {}, y = {}", p.kappa(), p.x(), p.y()),
        format!("x^2 - y^2 = {:.6e}", p.coupling_margin()),
        format!(
            "xy = {:.6e} ({})",
            p.x() * p.y(),
            if p.is_attractive() { "attractive" } else { "repulsive" }
        ),
        format!("q0 regular: {}", lie::is_regular(q, m)),
        format!("q0 in Weyl chamber: {}", lie::in_weyl_chamber(q, m)),
        format!("chamber margin: {:.6e}", lie::chamber_margin(q, m)),
        format!("H(q0, p0) = {:.16e}", exp.model.hamiltonian(&exp.phi0)?),
        format!(
            "dt = {}, t_end = {}, k = {}, sample_every = {}, samples = {}",
            exp.solver.dt,
            exp.solver.t_end,
            exp.solver.k,
            exp.solver.sample_every,
            exp.solver.sample_times().len()
        ),
    ];
    for line in lines {
        writeln!(out, "{line}").map_err(io)?;
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub residual_plus: f64,
    pub residual_gamma_plus: f64,
    pub hamiltonian: f64,
    pub h1: f64,
    pub energy_identity: f64,
    pub tolerance: f64,
    pub corrupted: bool,
    pub passed: bool,
}

pub fn check(exp: &Experiment, opts: &Options, out: &mut dyn Write) -> CliResult<bool> {
    let tolerance = opts.tolerance(CHECK_TOLERANCE)?;
    let model = &exp.model;
    let n = model.n();
    let mut j = model.build_lax(&exp.phi0)?.j;
    if opts.corrupt_lax {
        warn!("corrupting J[0, {n}] by {LAX_CORRUPTION}");
        j[(0, n)] += Complex64::new(LAX_CORRUPTION, 0.0);
    }
    let residuals = model.constraint_residuals(&exp.phi0.q, &j)?;
    let hamiltonian = model.hamiltonian(&exp.phi0)?;
    let h1 = (&j * &j).trace().re / 4.0;
    let energy_identity = (hamiltonian - h1).abs();
    let passed = residuals.max() <= tolerance && energy_identity <= tolerance;
    let report = CheckReport {
        residual_plus: residuals.residual_plus,
        residual_gamma_plus: residuals.residual_gplus,
        hamiltonian,
        h1,
        energy_identity,
        tolerance,
        corrupted: opts.corrupt_lax,
        passed,
    };
    writeln!(out, "constraint residual (theta-even): {:.3e}", report.residual_plus).map_err(io)?;
    writeln!(out, "constraint residual (gamma-even, conjugated): {:.3e}", report.residual_gamma_plus)
        .map_err(io)?;
    writeln!(out, "|H - H1| = {:.3e}  (H = {:.16e})", energy_identity, hamiltonian).map_err(io)?;
    writeln!(out, "tolerance {tolerance:.1e}: {}", verdict(passed)).map_err(io)?;
    if let Some(path) = opts.output_path(exp)? {
        output::write_json(&path, &report)?;
    }
    Ok(passed)
}

fn write_run(
    exp: &Experiment,
    path: &std::path::Path,
    traj: &Trajectory,
    solver: &str,
    halt: Option<Halt>,
) -> CliResult<Sidecar> {
    output::write_csv(path, &exp.model, traj)?;
    let mut sidecar = Sidecar::new(solver, exp.solver.k, &exp.model, traj)?;
    sidecar.halted = halt;
    output::write_json(&output::sidecar_path(path), &sidecar)?;
    Ok(sidecar)
}

pub fn simulate(exp: &Experiment, opts: &Options, out: &mut dyn Write) -> CliResult<bool> {
    if exp.solver.k != 1 {
        return Err(CliError::Usage(format!(
            "simulate integrates the k = 1 flow only (config has k = {}); use solve",
            exp.solver.k
        )));
    }
    let path = opts.require_output(exp)?;
    info!("verlet: {} steps of dt = {}", exp.solver.step_count(), exp.solver.dt);
    match integrate_ode(&exp.model, &exp.phi0, &exp.solver) {
        Ok(traj) => {
            let sidecar = write_run(exp, &path, &traj, "verlet", None)?;
            writeln!(
                out,
                "wrote {} samples to {} (max relative drift {:.3e})",
                sidecar.samples,
                path.display(),
                sidecar.max_relative_drift
            )
            .map_err(io)?;
            Ok(true)
        }
        Err(CoreError::IntegrationHalted { time, reason, partial }) => {
            let halt = Halt {
                time,
                reason: reason.to_string(),
            };
            if !partial.is_empty() {
                write_run(exp, &path, &partial, "verlet", Some(halt))?;
            }
            Err(CoreError::IntegrationHalted { time, reason, partial }.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn exact_run(exp: &Experiment, times: &[f64], direct: bool) -> CliResult<(Trajectory, &'static str)> {
    let (model, phi0, k) = (&exp.model, &exp.phi0, exp.solver.k);
    if direct {
        let q_only = spectral_solve_q(model, phi0, k, times)?;
        Ok((reconstruct_p(model, phi0, &q_only, k)?, "spectral-direct"))
    } else {
        Ok((spectral_solve(model, phi0, k, times, SegmentOptions::default())?, "spectral-segmented"))
    }
}

pub fn solve(exp: &Experiment, opts: &Options, out: &mut dyn Write) -> CliResult<bool> {
    let path = opts.require_output(exp)?;
    let times = exp.solver.sample_times();
    info!("exact solver: k = {}, {} sample times", exp.solver.k, times.len());
    let (traj, solver) = exact_run(exp, &times, opts.direct)?;
    let sidecar = write_run(exp, &path, &traj, solver, None)?;
    writeln!(
        out,
        "wrote {} samples to {} (max relative drift {:.3e}, min eigenvalue gap {:.3e})",
        sidecar.samples,
        path.display(),
        sidecar.max_relative_drift,
        sidecar.min_eig_gap.unwrap_or(f64::NAN)
    )
    .map_err(io)?;
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub solver: String,
    pub samples: usize,
    pub max_dq: f64,
    pub max_dq_time: f64,
    pub max_dp: f64,
    pub max_dp_time: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Largest entrywise difference and the sample time where it occurs.
fn max_gap(times: &[f64], a: &[Vec<f64>], b: &[Vec<f64>]) -> (f64, f64) {
    let mut worst = (0.0, 0.0);
    for ((t, x), y) in times.iter().zip(a).zip(b) {
        for (u, v) in x.iter().zip(y) {
            let d = (u - v).abs();
            if d > worst.0 {
                worst = (d, *t);
            }
        }
    }
    worst
}

pub fn compare(exp: &Experiment, opts: &Options, out: &mut dyn Write) -> CliResult<bool> {
    if exp.solver.k != 1 {
        return Err(CliError::Usage(format!(
            "compare needs k = 1 (config has k = {})",
            exp.solver.k
        )));
    }
    let tolerance = opts.tolerance(COMPARE_TOLERANCE)?;
    let ode = integrate_ode(&exp.model, &exp.phi0, &exp.solver)?;
    let (exact, solver) = exact_run(exp, &ode.times, opts.direct)?;
    let (max_dq, max_dq_time) = max_gap(&ode.times, &ode.qs, &exact.qs);
    let (max_dp, max_dp_time) = max_gap(
        &ode.times,
        ode.ps.as_deref().unwrap_or_default(),
        exact.ps.as_deref().unwrap_or_default(),
    );
    let passed = max_dq <= tolerance && max_dp <= tolerance;
    let report = CompareReport {
        solver: solver.to_string(),
        samples: ode.len(),
        max_dq,
        max_dq_time,
        max_dp,
        max_dp_time,
        tolerance,
        passed,
    };
    writeln!(out, "verlet (dt = {}) vs {solver} over {} samples", exp.solver.dt, report.samples)
        .map_err(io)?;
    writeln!(out, "max |dq| = {max_dq:.6e} at t = {max_dq_time}").map_err(io)?;
    writeln!(out, "max |dp| = {max_dp:.6e} at t = {max_dp_time}").map_err(io)?;
    writeln!(out, "tolerance {tolerance:.1e}: {}", verdict(passed)).map_err(io)?;
    if let Some(path) = opts.output_path(exp)? {
        output::write_json(&path, &report)?;
    }
    Ok(passed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketPoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// `|{H_j, H_k}|`.
    pub matrix: Vec<Vec<f64>>,
    /// `max(1, |H_j||H_k|)`.
    pub scale: Vec<Vec<f64>>,
    pub max_scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvolutionReport {
    pub step: f64,
    pub tolerance: f64,
    pub points: Vec<BracketPoint>,
    pub max_scaled: f64,
    pub passed: bool,
}

fn bracket_point(exp: &Experiment, phi: &PhasePoint) -> CliResult<BracketPoint> {
    let m = involution_matrix(&exp.model, phi, BRACKET_STEP)?;
    let n = exp.model.n();
    let matrix = m.entries.iter().map(|row| row.iter().map(|v| v.abs()).collect()).collect();
    let scale = (0..n).map(|j| (0..n).map(|k| m.scale(j, k)).collect()).collect();
    Ok(BracketPoint {
        q: phi.q.clone(),
        p: phi.p.clone(),
        matrix,
        scale,
        max_scaled: m.max_scaled(),
    })
}

pub fn involution(exp: &Experiment, opts: &Options, out: &mut dyn Write) -> CliResult<bool> {
    let tolerance = opts.tolerance(INVOLUTION_TOLERANCE)?;
    let (n, m) = (exp.model.n(), exp.model.params().m());
    let mut points = vec![bracket_point(exp, &exp.phi0)?];
    let mut rng = ChaCha8Rng::seed_from_u64(exp.config.seed);
    for _ in 0..opts.samples {
        let phi = random_phase_point(&mut rng, n, m, 0.2, 1.0);
        points.push(bracket_point(exp, &phi)?);
    }
    let max_scaled = points.iter().map(|p| p.max_scaled).fold(0.0, f64::max);
    let passed = max_scaled <= tolerance;
    let report = InvolutionReport {
        step: BRACKET_STEP,
        tolerance,
        points,
        max_scaled,
        passed,
    };
    let text = serde_json::to_string_pretty(&report)?;
    writeln!(out, "{text}").map_err(io)?;
    if let Some(path) = opts.output_path(exp)? {
        output::write_json(&path, &report)?;
    }
    Ok(passed)
}
