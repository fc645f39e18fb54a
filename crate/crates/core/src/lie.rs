//! The real form su(n,n) in the split-signature convention, its two commuting
//! involutions, and the constant matrices attached to a species split `m`.
//!
//! Block conventions: all 2n×2n matrices are written in n×n blocks. The
//! Cartan involution is `θ(V) = −V†`; the second involution is
//! `γ(V) = −D V† D` with `D = diag(I_m, I_m)`, `I_m = diag(1_m, −1_{n−m})`.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, Complex64, I, ONE, ZERO};

/// Absolute tolerance for group membership residuals.
pub const GROUP_TOL: f64 = 1e-10;
/// Relative tolerance (times `max(1, ‖V‖_F)`) for algebra membership.
pub const ALGEBRA_TOL: f64 = 1e-10;
/// Threshold used by the strict inequalities of [`is_regular`] and
/// [`in_weyl_chamber`].
pub const STRICT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Simultaneous eigenspace label: `theta` is the θ-eigenvalue, `gamma` the
/// γ-eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubspaceLabel {
    pub theta: Sign,
    pub gamma: Sign,
}

impl SubspaceLabel {
    pub const fn new(theta: Sign, gamma: Sign) -> Self {
        Self { theta, gamma }
    }

    pub const ALL: [SubspaceLabel; 4] = [
        SubspaceLabel::new(Sign::Plus, Sign::Plus),
        SubspaceLabel::new(Sign::Plus, Sign::Minus),
        SubspaceLabel::new(Sign::Minus, Sign::Plus),
        SubspaceLabel::new(Sign::Minus, Sign::Minus),
    ];
}

impl fmt::Display for SubspaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |x: Sign| if x == Sign::Plus { '+' } else { '-' };
        write!(f, "({},{})", s(self.theta), s(self.gamma))
    }
}

/// Result of a membership test together with the residuals it was based on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub member: bool,
    /// `‖V†Q + QV‖_F` for the algebra, `‖g†Qg − Q‖_F` for the group.
    pub form_residual: f64,
    /// `|tr V|` for the algebra, `|det g − 1|` for the group.
    pub scalar_residual: f64,
}

/// Constant matrices for a fixed `(n, m)`.
#[derive(Debug, Clone)]
pub struct Structure {
    n: usize,
    m: usize,
    q: ComplexMatrix,
    im: ComplexMatrix,
    dm: ComplexMatrix,
    dm_signs: Vec<f64>,
    cl: ComplexMatrix,
    cr: ComplexMatrix,
    m_basis: Vec<ComplexMatrix>,
}

impl Structure {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if m < 1 || m >= n {
            return Err(Error::InvalidSpeciesSplit { n, m });
        }
        let dim = 2 * n;
        let im_signs: Vec<f64> = (0..n).map(|j| if j < m { 1.0 } else { -1.0 }).collect();
        let dm_signs: Vec<f64> = im_signs.iter().chain(&im_signs).copied().collect();

        let q = ComplexMatrix::from_fn(dim, |r, c| if r.abs_diff(c) == n { ONE } else { ZERO });
        let im = ComplexMatrix::from_real_diagonal(&im_signs);
        let dm = ComplexMatrix::from_real_diagonal(&dm_signs);
        let cl = q.scale(I);
        let cr = ComplexMatrix::from_fn(dim, |r, c| {
            if r.abs_diff(c) == n {
                I * im_signs[r % n]
            } else {
                ZERO
            }
        });
        let m_basis = (0..n - 1)
            .map(|k| {
                ComplexMatrix::from_fn(dim, |r, c| {
                    if r != c {
                        ZERO
                    } else if r % n == k {
                        I
                    } else if r % n == k + 1 {
                        -I
                    } else {
                        ZERO
                    }
                })
            })
            .collect();

        Ok(Self {
            n,
            m,
            q,
            im,
            dm,
            dm_signs,
            cl,
            cr,
            m_basis,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// 2n.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn q(&self) -> &ComplexMatrix {
        &self.q
    }

    pub fn im(&self) -> &ComplexMatrix {
        &self.im
    }

    pub fn dm(&self) -> &ComplexMatrix {
        &self.dm
    }

    /// Diagonal of `D_m` as ±1.
    pub fn dm_signs(&self) -> &[f64] {
        &self.dm_signs
    }

    /// Generator of the centre of the compact subalgebra, `i·Q`.
    pub fn cl(&self) -> &ComplexMatrix {
        &self.cl
    }

    /// Generator of the centre of the γ-fixed subalgebra.
    pub fn cr(&self) -> &ComplexMatrix {
        &self.cr
    }

    /// Basis `i·diag(e_k − e_{k+1}, e_k − e_{k+1})`, k = 1..n−1, of the
    /// centraliser complement 𝓜.
    pub fn m_basis(&self) -> &[ComplexMatrix] {
        &self.m_basis
    }

    /// `γ(V) = −D V† D`.
    pub fn gamma(&self, v: &ComplexMatrix) -> Result<ComplexMatrix> {
        v.ensure_dim(self.dim())?;
        let d = &self.dm_signs;
        let vh = v.dagger();
        Ok(ComplexMatrix::from_fn(self.dim(), |r, c| -vh[(r, c)] * (d[r] * d[c])))
    }

    /// `π_s^r(V) = ¼(V + s θV + r γV + sr θγV)`.
    pub fn project(&self, v: &ComplexMatrix, label: SubspaceLabel) -> Result<ComplexMatrix> {
        v.ensure_dim(self.dim())?;
        let s = label.theta.value();
        let r = label.gamma.value();
        let d = &self.dm_signs;
        let vh = v.dagger();
        // θV = −V†, γV = −D V† D, θγV = D V D.
        Ok(ComplexMatrix::from_fn(self.dim(), |a, b| {
            let dd = d[a] * d[b];
            (v[(a, b)] - vh[(a, b)] * s - vh[(a, b)] * (r * dd) + v[(a, b)] * (s * r * dd)) * 0.25
        }))
    }

    /// Projection onto the θ-eigenspace with eigenvalue `sign`, `½(V ± θV)`.
    pub fn project_theta(&self, v: &ComplexMatrix, sign: Sign) -> Result<ComplexMatrix> {
        v.ensure_dim(self.dim())?;
        let t = theta(v);
        Ok((v + &t.scale_real(sign.value())).scale_real(0.5))
    }

    /// Projection onto the γ-eigenspace with eigenvalue `sign`, `½(V ± γV)`.
    pub fn project_gamma(&self, v: &ComplexMatrix, sign: Sign) -> Result<ComplexMatrix> {
        let g = self.gamma(v)?;
        Ok((v + &g.scale_real(sign.value())).scale_real(0.5))
    }

    pub fn is_in_algebra(&self, v: &ComplexMatrix) -> Result<Membership> {
        v.ensure_dim(self.dim())?;
        let form = &(&v.dagger() * &self.q) + &(&self.q * v);
        let form_residual = form.frobenius_norm();
        let scalar_residual = v.trace().norm();
        let tol = ALGEBRA_TOL * v.frobenius_norm().max(1.0);
        Ok(Membership {
            member: form_residual <= tol && scalar_residual <= tol,
            form_residual,
            scalar_residual,
        })
    }

    pub fn is_in_group(&self, g: &ComplexMatrix) -> Result<Membership> {
        g.ensure_dim(self.dim())?;
        let form = &(&(&g.dagger() * &self.q) * g) - &self.q;
        let form_residual = form.frobenius_norm();
        let scalar_residual = (g.determinant() - ONE).norm();
        Ok(Membership {
            member: form_residual <= GROUP_TOL && scalar_residual <= GROUP_TOL,
            form_residual,
            scalar_residual,
        })
    }

    /// `⟨V, W⟩ = ½ tr(VW)`.
    ///
    /// The trace is real for pairs of algebra elements; an imaginary part
    /// above `1e−10·max(1, |tr VW|)` is reported as an error.
    pub fn scalar_product(&self, v: &ComplexMatrix, w: &ComplexMatrix) -> Result<f64> {
        v.ensure_dim(self.dim())?;
        w.ensure_dim(self.dim())?;
        real_half_trace(v, w)
    }
}

fn real_half_trace(v: &ComplexMatrix, w: &ComplexMatrix) -> Result<f64> {
    let t = v.trace_of_product(w);
    let tolerance = 1e-10 * t.norm().max(1.0);
    if t.im.abs() > tolerance {
        return Err(Error::ImaginaryPart {
            context: "scalar product tr(VW)",
            imaginary: t.im,
            tolerance,
        });
    }
    Ok(0.5 * t.re)
}

/// `θ(V) = −V†`.
pub fn theta(v: &ComplexMatrix) -> ComplexMatrix {
    -v.dagger()
}

/// Cartan element `diag(q_1, …, q_n, −q_1, …, −q_n)`.
pub fn embed_cartan(q: &[f64]) -> ComplexMatrix {
    let diag: Vec<f64> = q.iter().copied().chain(q.iter().map(|x| -x)).collect();
    ComplexMatrix::from_real_diagonal(&diag)
}

/// Exact exponential of a Cartan element, `diag(e^q, e^{−q})`.
pub fn exp_cartan(q: &[f64]) -> ComplexMatrix {
    let diag: Vec<f64> = q
        .iter()
        .map(|x| x.exp())
        .chain(q.iter().map(|x| (-x).exp()))
        .collect();
    ComplexMatrix::from_real_diagonal(&diag)
}

/// Regularity of a Cartan element for species split `m`: no coordinate
/// vanishes and no two coordinates of the same species coincide up to sign.
/// Returns `false` for an invalid split.
pub fn is_regular(q: &[f64], m: usize) -> bool {
    let n = q.len();
    if m < 1 || m >= n {
        return false;
    }
    if q.iter().any(|x| !x.is_finite() || x.abs() <= STRICT_TOL) {
        return false;
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let same_species = (k < m) || (j >= m);
            if same_species
                && ((q[j] - q[k]).abs() <= STRICT_TOL || (q[j] + q[k]).abs() <= STRICT_TOL)
            {
                return false;
            }
        }
    }
    true
}

/// First index at which `q_1 > … > q_m > 0`, `q_{m+1} > … > q_n > 0` fails
/// (zero-based), or `None` if `q` is in the open chamber.
pub fn chamber_violation(q: &[f64], m: usize) -> Option<usize> {
    let n = q.len();
    if m < 1 || m >= n {
        return Some(0);
    }
    for (i, x) in q.iter().enumerate() {
        if !x.is_finite() {
            return Some(i);
        }
        let last_of_species = i + 1 == m || i + 1 == n;
        let bound = if last_of_species { 0.0 } else { q[i + 1] };
        if x - bound <= STRICT_TOL {
            return Some(i);
        }
    }
    None
}

pub fn in_weyl_chamber(q: &[f64], m: usize) -> bool {
    chamber_violation(q, m).is_none()
}

/// Distance to the chamber walls: the smallest of the within-species gaps
/// and the smallest coordinate of each species. Negative outside.
pub fn chamber_margin(q: &[f64], m: usize) -> f64 {
    let n = q.len();
    let mut margin = f64::INFINITY;
    for i in 0..n {
        let last_of_species = i + 1 == m || i + 1 == n;
        let bound = if last_of_species { 0.0 } else { q[i + 1] };
        margin = margin.min(q[i] - bound);
    }
    margin
}

/// `X(u) = i(uu† − (u†u/n)·1)`.
pub fn orbit_block(u: &[Complex64]) -> Result<ComplexMatrix> {
    let n = u.len();
    let norm2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    if n == 0 || norm2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let shift = norm2 / n as f64;
    Ok(ComplexMatrix::from_fn(n, |j, k| {
        let outer = u[j] * u[k].conj();
        let diag = if j == k { shift } else { 0.0 };
        I * (outer - diag)
    }))
}

/// Orbit point `ξ(u)`: the 2n×2n matrix with `X(u)/2` in all four blocks.
pub fn xi(u: &[Complex64]) -> Result<ComplexMatrix> {
    let x = orbit_block(u)?;
    let n = u.len();
    Ok(ComplexMatrix::from_fn(2 * n, |r, c| x[(r % n, c % n)] * 0.5))
}

/// The slice representative of the orbit vector: every entry `√(2κ)`.
pub fn u_kappa(kappa: f64, n: usize) -> Result<Vec<Complex64>> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidKappa(kappa));
    }
    Ok(vec![Complex64::new((2.0 * kappa).sqrt(), 0.0); n])
}
