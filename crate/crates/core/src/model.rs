//! The two-species hyperbolic BC(n) Sutherland model.
//!
//! Particles `1..=m` form the first species and `m+1..=n` the second.
//! Same-species pairs repel through `κ²/sinh²` of the difference and sum
//! coordinates, cross-species pairs attract through `−κ²/cosh²`, and every
//! particle feels the wall terms `(x−y)²/(2 sinh²(2q))` plus
//! `± xy/(2 sinh²(q))` / `−xy/(2 cosh²(q))` depending on its species.
//!
//! [`SutherlandModel`] bundles validated couplings with the constant matrices
//! needed for the 2n×2n Lax matrix `J(q,p) = −x C^l − ξ(u^κ) + L(q,p)`.

use crate::error::{Error, Result};
use crate::lie::{self, in_weyl_chamber, Sign, Structure};
use crate::numerics::{ComplexMatrix, Complex64, I};

/// `|x² − y²|` must exceed this.
pub const COUPLING_TOL: f64 = 1e-12;
/// Collision guard: `|sinh(a)|` below this for any interacting argument `a`
/// makes a potential term exceed ~1e14.
pub const SINH_FLOOR: f64 = 1e-7;
/// Relative tolerance on the imaginary part of `tr(J^{2k})`.
pub const TRACE_IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    n: usize,
    m: usize,
    kappa: f64,
    x: f64,
    y: f64,
}

impl ModelParams {
    pub fn new(n: usize, m: usize, kappa: f64, x: f64, y: f64) -> Result<Self> {
        if m < 1 || m >= n {
            return Err(Error::InvalidSpeciesSplit { n, m });
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidKappa(kappa));
        }
        if !x.is_finite() {
            return Err(Error::NonFiniteCoupling { name: "x" });
        }
        if !y.is_finite() {
            return Err(Error::NonFiniteCoupling { name: "y" });
        }
        if (x * x - y * y).abs() <= COUPLING_TOL {
            return Err(Error::DegenerateCouplings { x, y });
        }
        Ok(Self { n, m, kappa, x, y })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }

    /// `xy > 0`: opposite-species attraction with a repulsive charge at the
    /// origin for the first species.
    pub fn is_attractive(&self) -> bool {
        self.x * self.y > 0.0
    }

    pub fn coupling_margin(&self) -> f64 {
        self.x * self.x - self.y * self.y
    }

    /// Same parameters with `y` replaced, bypassing the `x² ≠ y²` check.
    /// Only meant for probing constraint residuals.
    pub fn with_y_unchecked(mut self, y: f64) -> Self {
        self.y = y;
        self
    }

    fn same_species(&self, j: usize, k: usize) -> bool {
        (j < self.m) == (k < self.m)
    }
}

/// Positions and momenta.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::InvalidPhasePoint(format!(
                "q has {} entries but p has {}",
                q.len(),
                p.len()
            )));
        }
        if let Some(i) = q.iter().chain(&p).position(|v| !v.is_finite()) {
            return Err(Error::InvalidPhasePoint(format!("non-finite entry {i}")));
        }
        Ok(Self { q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

/// Lax matrix `J` and its θ-odd part `L`.
#[derive(Debug, Clone)]
pub struct LaxMatrix {
    pub j: ComplexMatrix,
    pub l: ComplexMatrix,
}

/// Frobenius residuals of the two moment-map constraints at a slice point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintReport {
    /// `‖π_+(J) + x C^l + ξ(u^κ)‖_F`.
    pub residual_plus: f64,
    /// `‖π^+(e^{−q} J e^{q}) − y C^r‖_F`.
    pub residual_gplus: f64,
}

impl ConstraintReport {
    pub fn max(&self) -> f64 {
        self.residual_plus.max(self.residual_gplus)
    }
}

#[derive(Debug, Clone)]
pub struct SutherlandModel {
    params: ModelParams,
    structure: Structure,
    xi_kappa: ComplexMatrix,
    /// `−x C^l − ξ(u^κ)`.
    offset: ComplexMatrix,
}

// Written through e^{-2|a|} so that large arguments decay to zero instead of
// overflowing.
fn inv_sinh2(a: f64) -> f64 {
    let e = (-2.0 * a.abs()).exp();
    let d = (-2.0 * a.abs()).exp_m1();
    4.0 * e / (d * d)
}

fn inv_cosh2(a: f64) -> f64 {
    let e = (-2.0 * a.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// d/da sinh⁻²(a)
fn d_inv_sinh2(a: f64) -> f64 {
    -2.0 * inv_sinh2(a) / a.tanh()
}

/// d/da cosh⁻²(a)
fn d_inv_cosh2(a: f64) -> f64 {
    -2.0 * a.tanh() * inv_cosh2(a)
}

impl SutherlandModel {
    pub fn new(params: ModelParams) -> Result<Self> {
        let structure = Structure::new(params.n, params.m)?;
        let xi_kappa = lie::xi(&lie::u_kappa(params.kappa, params.n)?)?;
        let offset = -(&structure.cl().scale_real(params.x) + &xi_kappa);
        Ok(Self {
            params,
            structure,
            xi_kappa,
            offset,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    /// `ξ(u^κ)`.
    pub fn xi_kappa(&self) -> &ComplexMatrix {
        &self.xi_kappa
    }

    fn check_dims(&self, phi: &PhasePoint) -> Result<()> {
        for len in [phi.q.len(), phi.p.len()] {
            if len != self.params.n {
                return Err(Error::DimensionMismatch {
                    expected: self.params.n,
                    actual: len,
                });
            }
        }
        Ok(())
    }

    /// Rejects configurations where a repulsive term is about to blow up.
    pub fn check_nonsingular(&self, q: &[f64]) -> Result<()> {
        let n = self.params.n;
        let m = self.params.m;
        let guard = |a: f64, label: &dyn Fn() -> String| -> Result<()> {
            let s = a.sinh().abs();
            if s < SINH_FLOOR || s.is_nan() {
                return Err(Error::SingularConfiguration {
                    argument: label(),
                    value: s,
                });
            }
            Ok(())
        };
        for j in 0..n {
            guard(2.0 * q[j], &|| format!("2q{}", j + 1))?;
            if j < m {
                guard(q[j], &|| format!("q{}", j + 1))?;
            }
            for k in (j + 1)..n {
                if self.params.same_species(j, k) {
                    guard(q[j] - q[k], &|| format!("q{} - q{}", j + 1, k + 1))?;
                    guard(q[j] + q[k], &|| format!("q{} + q{}", j + 1, k + 1))?;
                }
            }
        }
        Ok(())
    }

    pub fn potential(&self, q: &[f64]) -> Result<f64> {
        if q.len() != self.params.n {
            return Err(Error::DimensionMismatch {
                expected: self.params.n,
                actual: q.len(),
            });
        }
        self.check_nonsingular(q)?;
        let ModelParams { n, m, kappa, x, y } = self.params;
        let k2 = kappa * kappa;
        let mut v = 0.0;
        for j in 0..n {
            for k in (j + 1)..n {
                let (d, s) = (q[j] - q[k], q[j] + q[k]);
                if self.params.same_species(j, k) {
                    v += k2 * inv_sinh2(d) + k2 * inv_sinh2(s);
                } else {
                    v -= k2 * inv_cosh2(d) + k2 * inv_cosh2(s);
                }
            }
        }
        let xy = x * y;
        let xmy2 = (x - y) * (x - y);
        for (j, &qj) in q.iter().enumerate() {
            v += 0.5 * xmy2 * inv_sinh2(2.0 * qj);
            if j < m {
                v += 0.5 * xy * inv_sinh2(qj);
            } else {
                v -= 0.5 * xy * inv_cosh2(qj);
            }
        }
        Ok(v)
    }

    pub fn hamiltonian(&self, phi: &PhasePoint) -> Result<f64> {
        self.check_dims(phi)?;
        let kinetic = 0.5 * phi.p.iter().map(|p| p * p).sum::<f64>();
        Ok(kinetic + self.potential(&phi.q)?)
    }

    /// `∂V/∂q` (the momenta do not enter).
    pub fn grad_potential(&self, q: &[f64]) -> Result<Vec<f64>> {
        if q.len() != self.params.n {
            return Err(Error::DimensionMismatch {
                expected: self.params.n,
                actual: q.len(),
            });
        }
        self.check_nonsingular(q)?;
        let ModelParams { n, m, kappa, x, y } = self.params;
        let k2 = kappa * kappa;
        let mut g = vec![0.0; n];
        for j in 0..n {
            for k in (j + 1)..n {
                let (d, s) = (q[j] - q[k], q[j] + q[k]);
                let (fd, fs) = if self.params.same_species(j, k) {
                    (k2 * d_inv_sinh2(d), k2 * d_inv_sinh2(s))
                } else {
                    (-k2 * d_inv_cosh2(d), -k2 * d_inv_cosh2(s))
                };
                g[j] += fd + fs;
                g[k] += fs - fd;
            }
        }
        let xy = x * y;
        let xmy2 = (x - y) * (x - y);
        for (j, &qj) in q.iter().enumerate() {
            g[j] += xmy2 * d_inv_sinh2(2.0 * qj);
            if j < m {
                g[j] += 0.5 * xy * d_inv_sinh2(qj);
            } else {
                g[j] -= 0.5 * xy * d_inv_cosh2(qj);
            }
        }
        Ok(g)
    }

    pub fn grad_q_hamiltonian(&self, phi: &PhasePoint) -> Result<Vec<f64>> {
        self.check_dims(phi)?;
        self.grad_potential(&phi.q)
    }

    /// The θ-odd part `L(q,p)` of the Lax matrix. Every mirrored entry is
    /// written from the same computed value.
    pub fn lax_l(&self, phi: &PhasePoint) -> Result<ComplexMatrix> {
        self.check_dims(phi)?;
        self.check_nonsingular(&phi.q)?;
        let ModelParams { n, m, kappa, x, y } = self.params;
        let q = &phi.q;
        let mut l = ComplexMatrix::zeros(2 * n);
        for j in 0..n {
            for k in (j + 1)..n {
                let (d, s) = (q[j] - q[k], q[j] + q[k]);
                let (fd, fs) = if self.params.same_species(j, k) {
                    (1.0 / d.tanh(), 1.0 / s.tanh())
                } else {
                    (d.tanh(), s.tanh())
                };
                let a = -I * (kappa * fd);
                l[(j, k)] = a;
                l[(k, j)] = -a;
                l[(j + n, k + n)] = -a;
                l[(k + n, j + n)] = a;

                let b = -I * (kappa * fs);
                l[(j, k + n)] = b;
                l[(k, j + n)] = b;
                l[(j + n, k)] = -b;
                l[(k + n, j)] = -b;
            }
        }
        for (l_idx, &ql) in q.iter().enumerate() {
            let wall = if l_idx < m { -y } else { y };
            let c = I * (wall / (2.0 * ql).sinh()) - I * (x / (2.0 * ql).tanh());
            l[(l_idx, l_idx + n)] = c;
            l[(l_idx + n, l_idx)] = -c;
            let p = Complex64::new(phi.p[l_idx], 0.0);
            l[(l_idx, l_idx)] = p;
            l[(l_idx + n, l_idx + n)] = -p;
        }
        Ok(l)
    }

    pub fn build_lax(&self, phi: &PhasePoint) -> Result<LaxMatrix> {
        let l = self.lax_l(phi)?;
        let j = &self.offset + &l;
        Ok(LaxMatrix { j, l })
    }

    fn check_flow_index(&self, k: usize) -> Result<()> {
        if k < 1 || k > self.params.n {
            return Err(Error::InvalidFlowIndex {
                k,
                n: self.params.n,
            });
        }
        Ok(())
    }

    /// `(1/4k) tr(J^{2k})` with `J^{2k}` obtained by binary powering of `J²`.
    pub fn reduced_hamiltonian(&self, phi: &PhasePoint, k: usize) -> Result<f64> {
        self.check_flow_index(k)?;
        let j = self.build_lax(phi)?.j;
        let j2 = &j * &j;
        let t = j2.pow(k as u32).trace();
        real_trace(t, k)
    }

    /// All `H_1^red, …, H_n^red` from successive powers of `J²`.
    pub fn reduced_hamiltonians(&self, phi: &PhasePoint) -> Result<Vec<f64>> {
        let j = self.build_lax(phi)?.j;
        let j2 = &j * &j;
        let mut acc = j2.clone();
        let mut out = Vec::with_capacity(self.params.n);
        for k in 1..=self.params.n {
            if k > 1 {
                acc = &acc * &j2;
            }
            out.push(real_trace(acc.trace(), k)?);
        }
        Ok(out)
    }

    /// Moment-map residuals for the slice point `(e^q, J(q,p), xC^l + ξ(u^κ))`.
    pub fn verify_constraints(&self, phi: &PhasePoint) -> Result<ConstraintReport> {
        let lax = self.build_lax(phi)?;
        self.constraint_residuals(&phi.q, &lax.j)
    }

    /// Same residuals for an arbitrary `J` at positions `q`.
    pub fn constraint_residuals(&self, q: &[f64], j: &ComplexMatrix) -> Result<ConstraintReport> {
        let n = self.params.n;
        j.ensure_dim(2 * n)?;
        let s = &self.structure;

        let plus = &s.project_theta(j, Sign::Plus)?
            + &(&s.cl().scale_real(self.params.x) + &self.xi_kappa);
        let residual_plus = plus.frobenius_norm();

        // e^{−q} J e^{q}, entrywise: J_ab · exp(q̂_b − q̂_a) with q̂ = (q, −q).
        let qh = |a: usize| if a < n { q[a] } else { -q[a - n] };
        let conj = ComplexMatrix::from_fn(2 * n, |a, b| j[(a, b)] * (qh(b) - qh(a)).exp());
        let gplus = &s.project_gamma(&conj, Sign::Plus)? - &s.cr().scale_real(self.params.y);
        let residual_gplus = gplus.frobenius_norm();

        Ok(ConstraintReport {
            residual_plus,
            residual_gplus,
        })
    }

    /// Whether `phi` is a valid dynamical state: right size, q in the open
    /// chamber, non-singular.
    pub fn check_state(&self, phi: &PhasePoint) -> Result<()> {
        self.check_dims(phi)?;
        if let Some(index) = lie::chamber_violation(&phi.q, self.params.m) {
            return Err(Error::NotInChamber { index });
        }
        debug_assert!(in_weyl_chamber(&phi.q, self.params.m));
        self.check_nonsingular(&phi.q)
    }
}

fn real_trace(t: Complex64, k: usize) -> Result<f64> {
    let tolerance = TRACE_IMAG_TOL * t.norm().max(1.0);
    if t.im.abs() > tolerance {
        return Err(Error::ImaginaryPart {
            context: "tr(J^2k)",
            imaginary: t.im,
            tolerance,
        });
    }
    Ok(t.re / (4.0 * k as f64))
}
