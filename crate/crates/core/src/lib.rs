//! Two-species BC(n) Sutherland model obtained by Hamiltonian reduction of
//! the free geodesic motion on SU(n,n).
//!
//! * [`numerics`]: complex matrices, matrix exponential and Hermitian
//!   eigensolvers.
//! * [`lie`]: the su(n,n) structure: involutions, projections, the Cartan
//!   subalgebra and Weyl chamber, and the orbit elements `ξ(u)`.
//! * [`model`]: couplings, Hamiltonian, Lax matrix and reduced Hamiltonians.
//! * [`dynamics`]: Verlet integration, the exact projection method, Poisson
//!   brackets and conservation reports.
//! * [`sampling`]: random couplings and chamber points.

pub mod dynamics;
pub mod error;
pub mod lie;
pub mod model;
pub mod numerics;
pub mod sampling;

pub use dynamics::{
    conservation_report, integrate_ode, involution_matrix, poisson_bracket_fd,
    reconstruct_p, reconstruct_p_fd, spectral_solve, spectral_solve_q, DriftTable,
    InvolutionMatrix, SegmentOptions, SolverConfig, SpectralDiagnostics, Trajectory,
};
pub use error::{Error, Result};
pub use lie::{Sign, Structure, SubspaceLabel};
pub use model::{LaxMatrix, ModelParams, PhasePoint, SutherlandModel};
pub use numerics::{ComplexMatrix, Complex64};
