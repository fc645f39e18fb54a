use thiserror::Error;

use crate::dynamics::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square with dimension >= 1 (got {rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian: residual {residual:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { residual: f64, tolerance: f64 },

    #[error("imaginary part {imaginary:.3e} of {context} exceeds tolerance {tolerance:.3e}")]
    ImaginaryPart {
        context: &'static str,
        imaginary: f64,
        tolerance: f64,
    },

    #[error("species split requires 1 <= m < n (got n = {n}, m = {m})")]
    InvalidSpeciesSplit { n: usize, m: usize },

    #[error("orbit vector must be non-zero")]
    ZeroVector,

    #[error("coupling kappa must be positive and finite (got {0})")]
    InvalidKappa(f64),

    #[error("couplings violate x² ≠ y² (x = {x}, y = {y})")]
    DegenerateCouplings { x: f64, y: f64 },

    #[error("coupling {name} must be finite")]
    NonFiniteCoupling { name: &'static str },

    #[error("phase point is invalid: {0}")]
    InvalidPhasePoint(String),

    #[error("singular configuration: |sinh({argument})| = {value:.3e} is below the collision guard")]
    SingularConfiguration { argument: String, value: f64 },

    #[error("q is not in the Weyl chamber (first violation at index {index})")]
    NotInChamber { index: usize },

    #[error("flow index k = {k} outside 1..={n}")]
    InvalidFlowIndex { k: usize, n: usize },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("spectral breakdown at t = {time}: {reason}")]
    SpectralBreakdown { time: f64, reason: String },

    #[error("gauge continuity lost between t = {from} and t = {to} (overlap {overlap:.3}); use denser sample times")]
    ContinuityLost { from: f64, to: f64, overlap: f64 },

    #[error("finite-difference step {0} outside [1e-6, 1e-4]")]
    InvalidStep(f64),

    #[error("integration halted at t = {time}: {reason}")]
    IntegrationHalted {
        time: f64,
        reason: Box<Error>,
        partial: Box<Trajectory>,
    },
}
