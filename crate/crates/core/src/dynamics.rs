//! Trajectories of the reduced Hamiltonians.
//!
//! Two independent routes are provided:
//!
//! * [`integrate_ode`]: fixed-step Störmer–Verlet on Hamilton's equations of
//!   `H = H_1^red`.
//! * The exact projection method. The free flow `e^{tV_k}` on SU(n,n) is
//!   pushed back into the gauge slice by diagonalising the Hermitian matrix
//!   `W(t) = e^{tV_k} e^{2q(0)} D_m e^{tV_k†}`, whose spectrum is
//!   `{±e^{±2q_j(t)}}`. [`spectral_solve_q`] does this in one shot from
//!   `t = 0` and [`reconstruct_p`] recovers the momenta from the
//!   eigenvectors. [`spectral_solve`] applies the same map over short
//!   segments, restarting from the recovered `(q, p)`. The one-shot route
//!   loses accuracy once `e^{tV_k}` is too ill-conditioned (large `t`, higher
//!   flows); the segmented one stays accurate as long as every `e^{±2q_j}`
//!   is representable.

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::lie::{self, Sign, SubspaceLabel};
use crate::model::{PhasePoint, SutherlandModel};
use crate::numerics::{self, Complex64, ComplexMatrix, SignedGramEigen, ONE};

/// Relative gap below which two eigenvalues of `W(t)` are flagged.
pub const NEAR_DEGENERATE_GAP: f64 = 1e-10;
/// Minimum normalised overlap `|tr(η_prev† η)|/2n` between consecutive gauge
/// transformations.
pub const MIN_GAUGE_OVERLAP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Flow index; the ODE integrator only handles `k = 1`.
    pub k: usize,
    pub sample_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            k: 1,
            sample_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive (got {})", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "t_end must be non-negative (got {})",
                self.t_end
            )));
        }
        if self.t_end > 0.0 && self.dt > self.t_end {
            return Err(Error::InvalidConfig(format!(
                "dt = {} exceeds t_end = {}",
                self.dt, self.t_end
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidConfig("sample_every must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn step_count(&self) -> usize {
        (self.t_end / self.dt + 1e-9).floor() as usize
    }

    /// Times at which the ODE integrator records a sample.
    pub fn sample_times(&self) -> Vec<f64> {
        (0..=self.step_count())
            .step_by(self.sample_every)
            .map(|i| i as f64 * self.dt)
            .collect()
    }
}

/// Per-flow conservation diagnostics; index `k − 1` holds `H_k^red`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftTable {
    pub initial: Vec<f64>,
    /// `max_t |H_k(t) − H_k(0)|`.
    pub absolute: Vec<f64>,
    /// `absolute / max(1, |H_k(0)|)`.
    pub relative: Vec<f64>,
}

impl DriftTable {
    pub fn max_relative(&self) -> f64 {
        self.relative.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDiagnostics {
    /// Smallest distance between two eigenvalues of `W(t)` over all samples.
    pub min_eig_gap: f64,
    /// Same, divided by the larger of the two magnitudes.
    pub min_relative_gap: f64,
    pub near_degenerate: bool,
    /// `max_t ‖η J_0 η^{-1} − J(q(t), p(t))‖_F` when momenta were recovered.
    pub max_slice_residual: Option<f64>,
    /// `max_t ‖η ξ(u^κ) η^{-1} − ξ(u^κ)‖_F` when momenta were recovered.
    pub max_stabilizer_residual: Option<f64>,
    /// Number of exact-flow segments (1 per sample for the one-shot method).
    pub segments: usize,
}

impl SpectralDiagnostics {
    fn new() -> Self {
        Self {
            min_eig_gap: f64::INFINITY,
            min_relative_gap: f64::INFINITY,
            near_degenerate: false,
            max_slice_residual: None,
            max_stabilizer_residual: None,
            segments: 0,
        }
    }

    /// Gaps between eigenvalues that overflowed to ±∞ are skipped.
    fn record_spectrum(&mut self, sorted: &[f64]) {
        for w in sorted.windows(2) {
            if !(w[0].is_finite() && w[1].is_finite()) {
                continue;
            }
            let gap = w[1] - w[0];
            let rel = gap / w[0].abs().max(w[1].abs());
            self.min_eig_gap = self.min_eig_gap.min(gap);
            self.min_relative_gap = self.min_relative_gap.min(rel);
        }
        if self.min_relative_gap < NEAR_DEGENERATE_GAP && !self.near_degenerate {
            warn!("near-degenerate eigenvalues (relative gap {:.3e})", self.min_relative_gap);
            self.near_degenerate = true;
        }
    }

    fn record_gauge(&mut self, gauge: &Gauge) {
        let slice = self.max_slice_residual.unwrap_or(0.0);
        self.max_slice_residual = Some(slice.max(gauge.slice_residual));
        let stab = self.max_stabilizer_residual.unwrap_or(0.0);
        self.max_stabilizer_residual = Some(stab.max(gauge.stabilizer_residual));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub qs: Vec<Vec<f64>>,
    pub ps: Option<Vec<Vec<f64>>>,
    pub drift: Option<DriftTable>,
    pub spectral: Option<SpectralDiagnostics>,
}

impl Trajectory {
    fn with_capacity(cap: usize, with_momenta: bool) -> Self {
        Self {
            times: Vec::with_capacity(cap),
            qs: Vec::with_capacity(cap),
            ps: with_momenta.then(|| Vec::with_capacity(cap)),
            drift: None,
            spectral: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn phase_point(&self, i: usize) -> Option<PhasePoint> {
        let ps = self.ps.as_ref()?;
        Some(PhasePoint {
            q: self.qs.get(i)?.clone(),
            p: ps.get(i)?.clone(),
        })
    }

    pub fn last_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

/// Generator of the free flow of `H_k` on the unreduced phase space.
#[derive(Debug, Clone)]
pub struct FlowGenerator {
    pub vk: ComplexMatrix,
}

/// `V_k = J^{2k−1} − tr(J^{2k−1})/(2n) · 1`.
pub fn flow_generator_from_lax(j: &ComplexMatrix, k: usize) -> FlowGenerator {
    let dim = j.dim();
    let jp = j.pow((2 * k - 1) as u32);
    let shift = jp.trace() / dim as f64;
    let vk = &jp - &ComplexMatrix::identity(dim).scale(shift);
    FlowGenerator { vk }
}

pub fn flow_generator(model: &SutherlandModel, phi0: &PhasePoint, k: usize) -> Result<FlowGenerator> {
    check_k(model, k)?;
    let j = model.build_lax(phi0)?.j;
    Ok(flow_generator_from_lax(&j, k))
}

fn check_k(model: &SutherlandModel, k: usize) -> Result<()> {
    if k < 1 || k > model.n() {
        return Err(Error::InvalidFlowIndex { k, n: model.n() });
    }
    Ok(())
}

/// One Störmer–Verlet step: half kick, drift, half kick.
pub fn verlet_step(model: &SutherlandModel, phi: &PhasePoint, dt: f64) -> Result<PhasePoint> {
    let force = model.grad_q_hamiltonian(phi)?;
    verlet_step_with_force(model, phi, &force, dt).map(|(next, _)| next)
}

/// Verlet step reusing the gradient at the start point; returns the new point
/// together with the gradient there.
fn verlet_step_with_force(
    model: &SutherlandModel,
    phi: &PhasePoint,
    grad: &[f64],
    dt: f64,
) -> Result<(PhasePoint, Vec<f64>)> {
    let half = 0.5 * dt;
    let p_half: Vec<f64> = phi.p.iter().zip(grad).map(|(p, g)| p - half * g).collect();
    let q: Vec<f64> = phi.q.iter().zip(&p_half).map(|(q, p)| q + dt * p).collect();
    let grad_new = model.grad_potential(&q)?;
    let p: Vec<f64> = p_half.iter().zip(&grad_new).map(|(p, g)| p - half * g).collect();
    Ok((PhasePoint { q, p }, grad_new))
}

/// Fixed-step Verlet integration of `H = H_1^red` (the `k` field of the
/// configuration is ignored).
///
/// A singular configuration or an exit from the Weyl chamber halts the run
/// with [`Error::IntegrationHalted`], which carries the samples recorded so
/// far.
pub fn integrate_ode(
    model: &SutherlandModel,
    phi0: &PhasePoint,
    config: &SolverConfig,
) -> Result<Trajectory> {
    config.validate()?;
    model.check_state(phi0)?;
    let m = model.params().m();
    let steps = config.step_count();
    let mut traj = Trajectory::with_capacity(steps / config.sample_every + 1, true);
    let record = |traj: &mut Trajectory, t: f64, phi: &PhasePoint| {
        traj.times.push(t);
        traj.qs.push(phi.q.clone());
        traj.ps.as_mut().expect("momenta").push(phi.p.clone());
    };
    record(&mut traj, 0.0, phi0);

    let mut phi = phi0.clone();
    let mut grad = model.grad_potential(&phi.q)?;
    for i in 1..=steps {
        let t = i as f64 * config.dt;
        let halt = |reason: Error, mut traj: Trajectory| {
            traj.drift = conservation_report(model, &traj).ok();
            Error::IntegrationHalted {
                time: t,
                reason: Box::new(reason),
                partial: Box::new(traj),
            }
        };
        match verlet_step_with_force(model, &phi, &grad, config.dt) {
            Ok((next, g)) => {
                phi = next;
                grad = g;
            }
            Err(e) => return Err(halt(e, traj)),
        }
        if let Some(index) = lie::chamber_violation(&phi.q, m) {
            return Err(halt(Error::NotInChamber { index }, traj));
        }
        if i % config.sample_every == 0 {
            record(&mut traj, t, &phi);
        }
    }
    traj.drift = Some(conservation_report(model, &traj)?);
    Ok(traj)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.first() != Some(&0.0) {
        return Err(Error::InvalidConfig("sample times must start at 0".into()));
    }
    if times.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater) || !w[1].is_finite()) {
        return Err(Error::InvalidConfig(
            "sample times must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `q̂ = (q, −q)`, the diagonal of the Cartan element.
fn cartan_logs(q: &[f64]) -> Vec<f64> {
    q.iter().copied().chain(q.iter().map(|x| -x)).collect()
}

/// Which eigenpair carries slot `j` of `e^{2q} D_m` for `j < n`.
struct SlotAssignment {
    q: Vec<f64>,
    /// Index (into the solver's eigenpair list) of the eigenvalue `D_jj e^{2q_j}`.
    columns: Vec<usize>,
}

/// Species 1 takes the `m` largest positive eigenvalues (descending), species
/// 2 the `n − m` negative eigenvalues of largest magnitude; each gives
/// `q_j = ½ ln|λ|`.
fn assign_slots(sg: &SignedGramEigen, n: usize, m: usize, time: f64) -> Result<SlotAssignment> {
    let logs = &sg.log_norms;
    let dim = logs.len();
    let mut pos: Vec<usize> = (0..dim).filter(|&i| sg.signs[i] > 0.0).collect();
    let mut neg: Vec<usize> = (0..dim).filter(|&i| sg.signs[i] < 0.0).collect();
    if pos.len() != 2 * m || neg.len() != 2 * (n - m) {
        return Err(Error::SpectralBreakdown {
            time,
            reason: format!(
                "expected {} positive and {} negative eigenvalues, found {} and {}",
                2 * m,
                2 * (n - m),
                pos.len(),
                neg.len()
            ),
        });
    }
    pos.sort_by(|&a, &b| logs[b].total_cmp(&logs[a]));
    neg.sort_by(|&a, &b| logs[b].total_cmp(&logs[a]));
    let columns: Vec<usize> = pos[..m].iter().chain(&neg[..n - m]).copied().collect();
    let q: Vec<f64> = columns.iter().map(|&c| logs[c]).collect();
    if let Some(index) = lie::chamber_violation(&q, m) {
        return Err(Error::SpectralBreakdown {
            time,
            reason: format!("recovered positions leave the Weyl chamber at index {index}"),
        });
    }
    Ok(SlotAssignment { q, columns })
}

fn with_time(e: Error, time: f64) -> Error {
    match e {
        Error::SpectralBreakdown { reason, .. } => Error::SpectralBreakdown { time, reason },
        other => other,
    }
}

/// Eigenpairs of `W(t) = G D_m G†`, `G = e^{tV} e^{q0}`, computed from the
/// factor `G` by [`numerics::signed_gram_eigen_scaled`]; `W` itself is never
/// formed.
fn one_shot_eigen(
    model: &SutherlandModel,
    q0: &[f64],
    vk: &ComplexMatrix,
    t: f64,
) -> Result<(SignedGramEigen, SlotAssignment)> {
    let e = numerics::matexp(&vk.scale_real(t))?;
    let d = model.structure().dm_signs();
    let sg = numerics::signed_gram_eigen_scaled(&e, &cartan_logs(q0), d).map_err(|e| with_time(e, t))?;
    let slots = assign_slots(&sg, model.n(), model.params().m(), t)?;
    Ok((sg, slots))
}

/// Positions along the flow of `H_k^red` by one-shot diagonalisation of
/// `W(t)` at each requested time. Momenta are not filled in; see
/// [`reconstruct_p`].
pub fn spectral_solve_q(
    model: &SutherlandModel,
    phi0: &PhasePoint,
    k: usize,
    times: &[f64],
) -> Result<Trajectory> {
    check_k(model, k)?;
    check_times(times)?;
    model.check_state(phi0)?;
    let vk = flow_generator(model, phi0, k)?.vk;
    let mut traj = Trajectory::with_capacity(times.len(), false);
    let mut diag = SpectralDiagnostics::new();
    for &t in times {
        let (sg, slots) = one_shot_eigen(model, &phi0.q, &vk, t)?;
        diag.record_spectrum(&sg.sorted_eigenvalues());
        diag.segments += 1;
        traj.times.push(t);
        traj.qs.push(slots.q);
    }
    traj.spectral = Some(diag);
    Ok(traj)
}

/// Gauge transformation `η ∈ G_+` with `η W η^{-1}` diagonal, built from the
/// eigenvectors `u_j` belonging to the slots `j < n`.
///
/// The slots `n + j` are filled with `Q u_j` (Q maps the `λ` eigenspace onto
/// the `1/λ` one), which makes `η` commute with `Q`. The remaining diagonal
/// phases are fixed by requiring `η ξ(u^κ) η^{-1} = ξ(u^κ)`, and the overall
/// phase by continuity with `prev`. Returns `η` and the normalised overlap
/// with `prev`.
fn gauge_from_eigenvectors(
    model: &SutherlandModel,
    vectors: &ComplexMatrix,
    columns: &[usize],
    prev: &ComplexMatrix,
) -> Result<(ComplexMatrix, f64)> {
    let n = model.n();
    let dim = 2 * n;
    let u = ComplexMatrix::from_fn(dim, |r, c| {
        if c < n {
            vectors[(r, columns[c])]
        } else {
            // (Q u)_r = u_{r ± n}
            vectors[((r + n) % dim, columns[c - n])]
        }
    });
    let xi = model.xi_kappa();
    let y = &(&u.dagger() * xi) * &u;
    let mut phases = vec![ONE; n];
    for k in 1..n {
        let z = xi[(0, k)] / y[(0, k)];
        phases[k] = z / z.norm();
    }
    let full: Vec<Complex64> = phases.iter().chain(&phases).copied().collect();
    let u = &u * &ComplexMatrix::from_diagonal(&full);
    let eta = u.dagger();

    let omega = (&prev.dagger() * &eta).trace();
    let overlap = omega.norm() / dim as f64;
    let eta = if omega.norm() > 0.0 {
        eta.scale(omega.conj() / omega.norm())
    } else {
        eta
    };
    Ok((eta, overlap))
}

/// Result of one gauge-fixing step.
struct Gauge {
    eta: ComplexMatrix,
    p: Vec<f64>,
    /// `‖η J_0 η^{-1} − J(q, p)‖_F`.
    slice_residual: f64,
    /// `‖η ξ η^{-1} − ξ‖_F`.
    stabilizer_residual: f64,
}

/// Reference data for one gauge-fixing step: the Lax pair at the start of
/// the flow and the gauge of the previous sample.
struct GaugeInput<'a> {
    j0: &'a ComplexMatrix,
    l0: &'a ComplexMatrix,
    prev: &'a ComplexMatrix,
    from: f64,
    to: f64,
}

/// Builds `η`, checks continuity against the previous sample and reads off
/// `p_l = Re π_−^−(η L_0 η^{-1})_{ll}`.
fn fix_gauge(
    model: &SutherlandModel,
    vectors: &ComplexMatrix,
    slots: &SlotAssignment,
    input: GaugeInput<'_>,
) -> Result<Gauge> {
    let (eta, overlap) = gauge_from_eigenvectors(model, vectors, &slots.columns, input.prev)?;
    if overlap < MIN_GAUGE_OVERLAP {
        return Err(Error::ContinuityLost {
            from: input.from,
            to: input.to,
            overlap,
        });
    }
    let n = model.n();
    let eta_h = eta.dagger();
    let rotated_l = &(&eta * input.l0) * &eta_h;
    let proj = model
        .structure()
        .project(&rotated_l, SubspaceLabel::new(Sign::Minus, Sign::Minus))?;
    let p: Vec<f64> = (0..n).map(|l| proj[(l, l)].re).collect();

    let rotated_j = &(&eta * input.j0) * &eta_h;
    let phi = PhasePoint {
        q: slots.q.clone(),
        p: p.clone(),
    };
    let slice = model.build_lax(&phi)?.j;
    let xi = model.xi_kappa();
    let rotated_xi = &(&eta * xi) * &eta_h;
    Ok(Gauge {
        slice_residual: (&rotated_j - &slice).frobenius_norm(),
        stabilizer_residual: (&rotated_xi - xi).frobenius_norm(),
        eta,
        p,
    })
}

/// Recovers `p(t)` for a trajectory produced by [`spectral_solve_q`] from the
/// eigenvectors of `W(t)`.
///
/// `η(0) = 1`. Eigenvector labels are fixed by the eigenvalue ordering and
/// their relative phases by `η ξ(u^κ) η^{-1} = ξ(u^κ)`; only the overall phase
/// of `η` is carried over from the previous sample. If consecutive gauges
/// overlap too little to do that, [`Error::ContinuityLost`] is returned and
/// denser sample times are needed.
pub fn reconstruct_p(
    model: &SutherlandModel,
    phi0: &PhasePoint,
    trajectory: &Trajectory,
    k: usize,
) -> Result<Trajectory> {
    check_k(model, k)?;
    check_times(&trajectory.times)?;
    model.check_state(phi0)?;
    let lax0 = model.build_lax(phi0)?;
    let vk = flow_generator_from_lax(&lax0.j, k).vk;
    let dim = 2 * model.n();

    let mut out = trajectory.clone();
    let mut diag = trajectory.spectral.clone().unwrap_or_else(SpectralDiagnostics::new);
    let mut ps = Vec::with_capacity(trajectory.len());
    let mut prev = ComplexMatrix::identity(dim);
    let mut prev_t = 0.0;
    for (i, &t) in trajectory.times.iter().enumerate() {
        let (sg, mut slots) = one_shot_eigen(model, &phi0.q, &vk, t)?;
        slots.q.clone_from(&trajectory.qs[i]);
        let input = GaugeInput {
            j0: &lax0.j,
            l0: &lax0.l,
            prev: &prev,
            from: prev_t,
            to: t,
        };
        let gauge = fix_gauge(model, &sg.vectors, &slots, input)?;
        diag.record_gauge(&gauge);
        ps.push(gauge.p);
        prev = gauge.eta;
        prev_t = t;
    }
    out.ps = Some(ps);
    out.spectral = Some(diag);
    Ok(out)
}

/// `p(t) = q̇(t)` by second-order finite differences on the (possibly
/// non-uniform) sample grid. Only valid for `k = 1`.
pub fn reconstruct_p_fd(trajectory: &Trajectory, k: usize) -> Result<Trajectory> {
    if k != 1 {
        return Err(Error::InvalidConfig(
            "finite-difference momenta are only valid for k = 1".into(),
        ));
    }
    let t = &trajectory.times;
    let qs = &trajectory.qs;
    let len = t.len();
    if len < 3 {
        return Err(Error::InvalidConfig(
            "finite-difference momenta need at least three samples".into(),
        ));
    }
    let n = qs[0].len();
    let mut ps = vec![vec![0.0; n]; len];
    for i in 0..len {
        // Three-point stencil (a, b, c) around i with weights for q_a, q_b, q_c.
        let (a, b, c, wa, wb, wc) = if i == 0 {
            let (h1, h2) = (t[1] - t[0], t[2] - t[1]);
            (
                0,
                1,
                2,
                -(2.0 * h1 + h2) / (h1 * (h1 + h2)),
                (h1 + h2) / (h1 * h2),
                -h1 / (h2 * (h1 + h2)),
            )
        } else if i == len - 1 {
            let (h1, h2) = (t[i - 1] - t[i - 2], t[i] - t[i - 1]);
            (
                i - 2,
                i - 1,
                i,
                h2 / (h1 * (h1 + h2)),
                -(h1 + h2) / (h1 * h2),
                (h1 + 2.0 * h2) / (h2 * (h1 + h2)),
            )
        } else {
            let (h1, h2) = (t[i] - t[i - 1], t[i + 1] - t[i]);
            (
                i - 1,
                i,
                i + 1,
                -h2 / (h1 * (h1 + h2)),
                (h2 - h1) / (h1 * h2),
                h1 / (h2 * (h1 + h2)),
            )
        };
        for l in 0..n {
            ps[i][l] = wa * qs[a][l] + wb * qs[b][l] + wc * qs[c][l];
        }
    }
    let mut out = trajectory.clone();
    out.ps = Some(ps);
    Ok(out)
}

/// Limits on the length of each exact-flow segment in [`spectral_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentOptions {
    /// Upper bound on the segment duration.
    pub max_step: f64,
    /// Upper bound on `h·‖V_k‖_F`, which bounds the condition number of
    /// `e^{hV_k}` by `e^{2·max_step_norm}`.
    pub max_step_norm: f64,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self {
            max_step: 0.1,
            max_step_norm: 1.0,
        }
    }
}

/// Exact flow of `H_k^red` evaluated segment by segment.
///
/// Each segment maps `(q, p)` at its start to `(q, p)` at its end with the
/// same projection as [`spectral_solve_q`]/[`reconstruct_p`], but the
/// eigenpairs of `W = G D_m G†`, `G = e^{hV_k} e^{q}`, are obtained from `G`
/// directly by [`numerics::signed_gram_eigen_scaled`]. Segments are short
/// enough that `e^{hV_k}` is well conditioned, and the positions come out as
/// logarithms of column scales, so every `q_j` keeps full accuracy however
/// far apart the particles drift.
pub fn spectral_solve(
    model: &SutherlandModel,
    phi0: &PhasePoint,
    k: usize,
    times: &[f64],
    options: SegmentOptions,
) -> Result<Trajectory> {
    check_k(model, k)?;
    check_times(times)?;
    model.check_state(phi0)?;
    if !(options.max_step > 0.0 && options.max_step_norm > 0.0) {
        return Err(Error::InvalidConfig("segment limits must be positive".into()));
    }
    let n = model.n();
    let m = model.params().m();
    let dim = 2 * n;
    let signs = model.structure().dm_signs().to_vec();
    let identity = ComplexMatrix::identity(dim);

    let mut traj = Trajectory::with_capacity(times.len(), true);
    let mut diag = SpectralDiagnostics::new();
    // W(0) = e^{2q0} D is diagonal.
    let mut initial: Vec<f64> = cartan_logs(&phi0.q)
        .iter()
        .zip(&signs)
        .map(|(l, d)| d * (2.0 * l).exp())
        .collect();
    initial.sort_by(f64::total_cmp);
    diag.record_spectrum(&initial);

    traj.times.push(0.0);
    traj.qs.push(phi0.q.clone());
    traj.ps.as_mut().expect("momenta").push(phi0.p.clone());

    let mut phi = phi0.clone();
    let mut t = 0.0;
    for &t_next in &times[1..] {
        let span = t_next - t;
        let lax = model.build_lax(&phi)?;
        let v_norm = flow_generator_from_lax(&lax.j, k).vk.frobenius_norm();
        let pieces = (span / options.max_step)
            .max(span * v_norm / options.max_step_norm)
            .ceil()
            .max(1.0) as usize;
        let h = span / pieces as f64;
        for piece in 0..pieces {
            let t_here = t + (piece + 1) as f64 * h;
            let lax = model.build_lax(&phi)?;
            let vk = flow_generator_from_lax(&lax.j, k).vk;
            let e = numerics::matexp(&vk.scale_real(h))?;
            let sg = numerics::signed_gram_eigen_scaled(&e, &cartan_logs(&phi.q), &signs)
                .map_err(|e| with_time(e, t_here))?;
            let slots = assign_slots(&sg, n, m, t_here)?;
            let input = GaugeInput {
                j0: &lax.j,
                l0: &lax.l,
                prev: &identity,
                from: t_here - h,
                to: t_here,
            };
            let gauge = fix_gauge(model, &sg.vectors, &slots, input)?;
            diag.record_spectrum(&sg.sorted_eigenvalues());
            diag.record_gauge(&gauge);
            diag.segments += 1;
            phi = PhasePoint {
                q: slots.q,
                p: gauge.p,
            };
            model.check_nonsingular(&phi.q).map_err(|e| with_time(e, t_here))?;
        }
        debug!("spectral segment to t = {t_next}: {pieces} pieces");
        t = t_next;
        traj.times.push(t);
        traj.qs.push(phi.q.clone());
        traj.ps.as_mut().expect("momenta").push(phi.p.clone());
    }
    traj.spectral = Some(diag);
    traj.drift = Some(conservation_report(model, &traj)?);
    Ok(traj)
}

/// Drift of every `H_k^red`, k = 1..n, along a trajectory with momenta.
pub fn conservation_report(model: &SutherlandModel, trajectory: &Trajectory) -> Result<DriftTable> {
    let ps = trajectory
        .ps
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("trajectory has no momenta".into()))?;
    let n = model.n();
    let mut initial = None;
    let mut absolute = vec![0.0; n];
    for (q, p) in trajectory.qs.iter().zip(ps) {
        let phi = PhasePoint { q: q.clone(), p: p.clone() };
        let h = model.reduced_hamiltonians(&phi)?;
        match &initial {
            None => initial = Some(h),
            Some(h0) => {
                for k in 0..n {
                    absolute[k] = f64::max(absolute[k], (h[k] - h0[k]).abs());
                }
            }
        }
    }
    let initial =
        initial.ok_or_else(|| Error::InvalidConfig("trajectory has no samples".into()))?;
    let relative = absolute
        .iter()
        .zip(&initial)
        .map(|(a, h0)| a / h0.abs().max(1.0))
        .collect();
    Ok(DriftTable {
        initial,
        absolute,
        relative,
    })
}

fn check_fd_step(h: f64) -> Result<()> {
    if !(1e-6..=1e-4).contains(&h) {
        return Err(Error::InvalidStep(h));
    }
    Ok(())
}

/// Gradients `(∂f/∂q, ∂f/∂p)` of a vector-valued function by the five-point
/// central stencil `(−f(x+2h) + 8f(x+h) − 8f(x−h) + f(x−2h)) / 12h`.
type Gradients = (Vec<Vec<f64>>, Vec<Vec<f64>>);

fn fd_gradients<F>(f: &F, phi: &PhasePoint, h: f64) -> Result<Gradients>
where
    F: Fn(&PhasePoint) -> Result<Vec<f64>>,
{
    let n = phi.dim();
    let mut dq = Vec::with_capacity(n);
    let mut dp = Vec::with_capacity(n);
    for l in 0..n {
        for (target, is_q) in [(&mut dq, true), (&mut dp, false)] {
            let at = |offset: f64| {
                let mut x = phi.clone();
                if is_q {
                    x.q[l] += offset;
                } else {
                    x.p[l] += offset;
                }
                f(&x)
            };
            let (f2, f1, m1, m2) = (at(2.0 * h)?, at(h)?, at(-h)?, at(-2.0 * h)?);
            target.push(
                (0..f1.len())
                    .map(|i| (-f2[i] + 8.0 * f1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h))
                    .collect(),
            );
        }
    }
    Ok((dq, dp))
}

/// `{f, g} = Σ_l (∂f/∂q_l ∂g/∂p_l − ∂f/∂p_l ∂g/∂q_l)` by central differences.
pub fn poisson_bracket_fd_with<F, G>(f: F, g: G, phi: &PhasePoint, h: f64) -> Result<f64>
where
    F: Fn(&PhasePoint) -> Result<f64>,
    G: Fn(&PhasePoint) -> Result<f64>,
{
    check_fd_step(h)?;
    let both = |x: &PhasePoint| -> Result<Vec<f64>> { Ok(vec![f(x)?, g(x)?]) };
    let (dq, dp) = fd_gradients(&both, phi, h)?;
    Ok((0..phi.dim())
        .map(|l| dq[l][0] * dp[l][1] - dp[l][0] * dq[l][1])
        .sum())
}

/// `{H_j^red, H_k^red}` at `phi` by central differences with step `h`.
pub fn poisson_bracket_fd(
    model: &SutherlandModel,
    phi: &PhasePoint,
    j: usize,
    k: usize,
    h: f64,
) -> Result<f64> {
    check_k(model, j)?;
    check_k(model, k)?;
    poisson_bracket_fd_with(
        |x| model.reduced_hamiltonian(x, j),
        |x| model.reduced_hamiltonian(x, k),
        phi,
        h,
    )
}

/// All pairwise brackets of the reduced Hamiltonians at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct InvolutionMatrix {
    /// `entries[j][k] = {H_{j+1}, H_{k+1}}`.
    pub entries: Vec<Vec<f64>>,
    pub hamiltonians: Vec<f64>,
}

impl InvolutionMatrix {
    /// `max(1, |H_j| |H_k|)`.
    pub fn scale(&self, j: usize, k: usize) -> f64 {
        (self.hamiltonians[j].abs() * self.hamiltonians[k].abs()).max(1.0)
    }

    /// `max_{j,k} |{H_j, H_k}| / scale(j, k)`.
    pub fn max_scaled(&self) -> f64 {
        let n = self.entries.len();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for k in 0..n {
                worst = worst.max(self.entries[j][k].abs() / self.scale(j, k));
            }
        }
        worst
    }
}

pub fn involution_matrix(model: &SutherlandModel, phi: &PhasePoint, h: f64) -> Result<InvolutionMatrix> {
    check_fd_step(h)?;
    let hamiltonians = model.reduced_hamiltonians(phi)?;
    let (dq, dp) = fd_gradients(&|x: &PhasePoint| model.reduced_hamiltonians(x), phi, h)?;
    let n = model.n();
    let entries = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| (0..n).map(|l| dq[l][j] * dp[l][k] - dp[l][j] * dq[l][k]).sum())
                .collect()
        })
        .collect();
    Ok(InvolutionMatrix {
        entries,
        hamiltonians,
    })
}

/// Membership residual of `η` in the compact subgroup: `‖η†η − 1‖_F` and
/// `‖ηQ − Qη‖_F`. Exposed for diagnostics and tests.
pub fn compact_residuals(model: &SutherlandModel, eta: &ComplexMatrix) -> (f64, f64) {
    let dim = eta.dim();
    let unitary = (&(&eta.dagger() * eta) - &ComplexMatrix::identity(dim)).frobenius_norm();
    let q = model.structure().q();
    let commute = (&(eta * q) - &(q * eta)).frobenius_norm();
    (unitary, commute)
}

/// The gauge transformation `η(t)` of the one-shot method at a single time.
pub fn gauge_at(
    model: &SutherlandModel,
    phi0: &PhasePoint,
    k: usize,
    t: f64,
) -> Result<ComplexMatrix> {
    check_k(model, k)?;
    let vk = flow_generator(model, phi0, k)?.vk;
    let (sg, slots) = one_shot_eigen(model, &phi0.q, &vk, t)?;
    let dim = 2 * model.n();
    let (eta, _) =
        gauge_from_eigenvectors(model, &sg.vectors, &slots.columns, &ComplexMatrix::identity(dim))?;
    Ok(eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    #[test]
    fn opposed_previous_gauge_loses_continuity() {
        let model = SutherlandModel::new(ModelParams::new(3, 1, 1.0, 2.0, 1.0).unwrap()).unwrap();
        let phi = PhasePoint::new(vec![1.6, 0.9, 0.4], vec![0.3, -0.2, 0.1]).unwrap();
        let lax = model.build_lax(&phi).unwrap();
        let vk = flow_generator_from_lax(&lax.j, 1).vk;
        let (sg, slots) = one_shot_eigen(&model, &phi.q, &vk, 0.0).unwrap();
        // η(0) = 1 and tr(diag(1, 1, 1, −1, −1, −1)) = 0
        let opposed = ComplexMatrix::from_real_diagonal(&[1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
        let input = |prev| GaugeInput {
            j0: &lax.j,
            l0: &lax.l,
            prev,
            from: 0.0,
            to: 0.0,
        };
        let err = fix_gauge(&model, &sg.vectors, &slots, input(&opposed)).err();
        assert!(matches!(err, Some(Error::ContinuityLost { .. })));

        let identity = ComplexMatrix::identity(6);
        let gauge = fix_gauge(&model, &sg.vectors, &slots, input(&identity)).unwrap();
        assert!(gauge.eta.max_abs_diff(&identity) < 1e-12);
        assert!(gauge.stabilizer_residual < 1e-12 && gauge.slice_residual < 1e-12);
    }
}
