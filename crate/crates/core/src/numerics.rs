//! Dense complex linear algebra used throughout the crate.
//!
//! [`ComplexMatrix`] is a thin square-matrix wrapper over `nalgebra`'s
//! `DMatrix<Complex64>`. On top of it this module provides the matrix
//! exponential, the Hermitian eigensolver, and a one-sided hyperbolic Jacobi
//! routine for eigenpairs of `G·diag(s)·G†` that never forms the product.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
pub use num_complex::Complex64;

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative Hermiticity tolerance accepted by [`eigh`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Square complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    /// Wraps a `nalgebra` matrix, checking shape and finiteness.
    pub fn new(inner: DMatrix<Complex64>) -> Result<Self> {
        let (rows, cols) = inner.shape();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        let m = Self(inner);
        m.check_finite()?;
        Ok(m)
    }

    /// Row-major construction; `entries.len()` must be a non-zero perfect square.
    pub fn from_row_slice(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::NotSquare {
                rows: dim,
                cols: entries.len().checked_div(dim).unwrap_or(0),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self(DMatrix::from_fn(dim, dim, f))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| ZERO)
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { ZERO })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn check_finite(&self) -> Result<()> {
        let d = self.dim();
        for j in 0..d {
            for i in 0..d {
                let z = self.0[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                actual: self.dim(),
            })
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn determinant(&self) -> Complex64 {
        self.0.clone().lu().determinant()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|i| self.0[(i, i)]).collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        self.0.column(j).iter().copied().collect()
    }

    /// `self · diag(d)`, i.e. column `j` scaled by `d[j]`.
    pub fn scale_columns(&self, d: &[f64]) -> Self {
        let mut out = self.0.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col *= Complex64::new(d[j], 0.0);
        }
        Self(out)
    }

    /// Checked product.
    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        rhs.ensure_dim(self.dim())?;
        Ok(Self(&self.0 * &rhs.0))
    }

    /// `tr(self · rhs)` without forming the product.
    pub fn trace_of_product(&self, rhs: &Self) -> Complex64 {
        let d = self.dim();
        let mut acc = ZERO;
        for i in 0..d {
            for k in 0..d {
                acc += self.0[(i, k)] * rhs.0[(k, i)];
            }
        }
        acc
    }

    /// `self^power` by binary powering.
    pub fn pow(&self, mut power: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::identity(self.dim());
        while power > 0 {
            if power & 1 == 1 {
                acc = &acc * &base;
            }
            power >>= 1;
            if power > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim(), self.dim())?;
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self.0[(i, j)];
                    format!("{:+.6e}{:+.6e}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut Complex64 {
        &mut self.0[idx]
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                assert_eq!(self.dim(), rhs.dim(), "matrix dimension mismatch");
                ComplexMatrix(&self.0 $op &rhs.0)
            }
        }
        impl $tr<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                &self $op &rhs
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-self.0)
    }
}

/// `AB − BA`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    b.ensure_dim(a.dim())?;
    Ok(&(a * b) - &(b * a))
}

/// Matrix exponential (nalgebra's scaling and squaring with Padé
/// approximants).
pub fn matexp(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.check_finite()?;
    ComplexMatrix::new(a.inner().clone().exp())
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `j` is the unit eigenvector for `eigenvalues[j]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `‖A − UΛU†‖_F`.
    pub fn reconstruction_residual(&self, a: &ComplexMatrix) -> f64 {
        let u = &self.eigenvectors;
        let lam: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|&l| Complex64::new(l, 0.0))
            .collect();
        let rec = &(u * &ComplexMatrix::from_diagonal(&lam)) * &u.dagger();
        (a - &rec).frobenius_norm()
    }

    /// `‖U†U − 1‖_F`.
    pub fn orthonormality_residual(&self) -> f64 {
        let u = &self.eigenvectors;
        (&(&u.dagger() * u) - &ComplexMatrix::identity(u.dim())).frobenius_norm()
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
///
/// Input must satisfy `‖A − A†‖_F ≤ 1e−10·max(1, ‖A‖_F)`; the Hermitian part
/// `(A + A†)/2` is what gets diagonalised.
pub fn eigh(a: &ComplexMatrix) -> Result<HermitianEigen> {
    a.check_finite()?;
    let ah = a.dagger();
    let residual = (a - &ah).frobenius_norm();
    let tolerance = HERMITIAN_TOL * a.frobenius_norm().max(1.0);
    if residual > tolerance {
        return Err(Error::NotHermitian {
            residual,
            tolerance,
        });
    }
    let sym = (a + &ah).scale_real(0.5).into_inner();
    let dim = a.dim();
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors =
        ComplexMatrix::from_fn(dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenpairs of `W = G·e^{L}·diag(s)·e^{L}·G†` for invertible `G`, real
/// log-scales `L = diag(l)` and a sign vector `s`.
///
/// Column `c` of `vectors` is a unit eigenvector with eigenvalue
/// `signs[c] · e^{2·log_norms[c]}`. Columns are in the order produced by the
/// reduction, not sorted.
#[derive(Debug, Clone)]
pub struct SignedGramEigen {
    pub signs: Vec<f64>,
    /// `½ ln |λ_c|`.
    pub log_norms: Vec<f64>,
    pub vectors: ComplexMatrix,
    pub sweeps: usize,
}

impl SignedGramEigen {
    /// `s_c e^{2 l_c}`; overflows to ±∞ for `l_c` beyond ~354.
    pub fn eigenvalue(&self, c: usize) -> f64 {
        self.signs[c] * (2.0 * self.log_norms[c]).exp()
    }

    /// All eigenvalues in ascending order.
    pub fn sorted_eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = (0..self.signs.len()).map(|c| self.eigenvalue(c)).collect();
        values.sort_by(f64::total_cmp);
        values
    }
}

const JACOBI_MAX_SWEEPS: usize = 60;

/// [`signed_gram_eigen_scaled`] with `L = 0`.
pub fn signed_gram_eigen(g: &ComplexMatrix, signs: &[f64]) -> Result<SignedGramEigen> {
    signed_gram_eigen_scaled(g, &vec![0.0; g.dim()], signs)
}

/// One-sided hyperbolic Jacobi: right-multiplies `G e^{L}` by
/// `diag(s)`-unitary plane rotations until its columns are mutually
/// orthogonal.
///
/// Columns of equal sign are mixed by ordinary unitary rotations and columns
/// of opposite sign by hyperbolic ones, so `W` is invariant throughout and
/// each column keeps its sign. Every column is stored as a unit vector with
/// a separate logarithmic scale, and the rotation coefficients are formed
/// from scale differences only. Eigenvalues spread over any number of orders
/// of magnitude therefore keep full relative accuracy and never overflow.
pub fn signed_gram_eigen_scaled(
    g: &ComplexMatrix,
    log_scales: &[f64],
    signs: &[f64],
) -> Result<SignedGramEigen> {
    g.check_finite()?;
    let dim = g.dim();
    for len in [signs.len(), log_scales.len()] {
        if len != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: len,
            });
        }
    }
    let breakdown = |reason: &str| Error::SpectralBreakdown {
        time: f64::NAN,
        reason: reason.into(),
    };
    let rank_deficient = || breakdown("rank-deficient factor in signed Gram eigenproblem");

    let mut cols = Vec::with_capacity(dim);
    let mut logs = Vec::with_capacity(dim);
    for (j, &l) in log_scales.iter().enumerate() {
        let mut v = g.column(j);
        let norm = normalize(&mut v).ok_or_else(rank_deficient)?;
        if !l.is_finite() {
            return Err(Error::NonFinite { row: j, col: j });
        }
        cols.push(v);
        logs.push(l + norm.ln());
    }

    let tol = dim as f64 * f64::EPSILON;
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < JACOBI_MAX_SWEEPS {
        sweeps += 1;
        let mut off = 0.0_f64;
        for a in 0..dim {
            for b in (a + 1)..dim {
                let gamma: Complex64 = cols[a].iter().zip(&cols[b]).map(|(x, y)| x.conj() * y).sum();
                let g_abs = gamma.norm();
                if g_abs <= tol {
                    continue;
                }
                off = off.max(g_abs);
                let phase = gamma / g_abs;
                let d = logs[a] - logs[b];
                let shrink = (-2.0 * d.abs()).exp();
                // `lead` is the rotation sine times e^{|d|}.
                let (c, lead) = if signs[a] == signs[b] {
                    let half = 0.5 * (1.0 - shrink);
                    let tau = g_abs / (half + (g_abs * g_abs * shrink + half * half).sqrt());
                    let sigma = if d > 0.0 { -1.0 } else { 1.0 };
                    let t = sigma * tau * (-d.abs()).exp();
                    let c = 1.0 / t.hypot(1.0);
                    (c, c * sigma * tau)
                } else {
                    // tanh 2ψ = −|g|/cosh d = y e^{−|d|}
                    let y = -2.0 * g_abs / (1.0 + shrink);
                    let x = y * (-d.abs()).exp();
                    if x.abs() >= 1.0 {
                        return Err(breakdown("hyperbolic rotation undefined (indefinite 2x2 pivot)"));
                    }
                    let psi = 0.5 * x.atanh();
                    // sinh(½ atanh x)/x; the series keeps subnormal x from
                    // collapsing the rotation to the identity.
                    let ratio = if x.abs() < 1e-4 { 0.5 + 0.1875 * x * x } else { psi.sinh() / x };
                    (psi.cosh(), ratio * y)
                };
                let (s_up, s_down) = if d >= 0.0 { (lead, lead * shrink) } else { (lead * shrink, lead) };
                // Equal signs: a' = c a − s ph̄ b, b' = s ph a + c b.
                // Opposite:    a' = c a + s ph̄ b, b' = s ph a + c b.
                let cross = if signs[a] == signs[b] { -s_down } else { s_down };
                let (left, right) = cols.split_at_mut(b);
                for (ra, rb) in left[a].iter_mut().zip(right[0].iter_mut()) {
                    let (va, vb) = (*ra, *rb);
                    *ra = va * c + vb * phase.conj() * cross;
                    *rb = va * phase * s_up + vb * c;
                }
                for j in [a, b] {
                    let norm = normalize(&mut cols[j]).ok_or_else(rank_deficient)?;
                    logs[j] += norm.ln();
                }
            }
        }
        if off <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(breakdown(&format!(
            "hyperbolic Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }
    let vectors = ComplexMatrix::from_fn(dim, |r, c| cols[c][r]);
    Ok(SignedGramEigen {
        signs: signs.to_vec(),
        log_norms: logs,
        vectors,
        sweeps,
    })
}

/// Scales `v` to unit length and returns the old norm, or `None` if it was
/// zero or non-finite.
fn normalize(v: &mut [Complex64]) -> Option<f64> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return None;
    }
    for z in v.iter_mut() {
        *z /= norm;
    }
    Some(norm)
}
