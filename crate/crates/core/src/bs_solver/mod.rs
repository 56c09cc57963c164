//! Birman–Schwinger discretization of `K(κ) = V^{1/2}(-Δ + κ²)^{-1}V^{1/2}`
//! over the well supports, its principal eigenvalue, and the bound-state
//! search `μ_max(K(κ*)) = 1`.

/// Outcome of a bound-state search below the essential threshold `-κ₀²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub kappa_star: f64,
    /// `-κ*²`.
    pub energy: f64,
    /// `-κ₀²`.
    pub threshold_energy: f64,
    /// `κ*² - κ₀²`, zero when no level lies below the threshold.
    pub binding_energy: f64,
    pub converged: bool,
    pub iterations: usize,
}

mod assemble;
mod grid;
mod solve;
mod trial;

pub use assemble::{assemble_block, assemble_block_with, assemble_operator, BSBlockOperator, BsNumerics, SelfTerm};
pub use grid::{build_grid, build_polar_grid, GridKind, QuadratureGrid};
pub use solve::{
    principal_eigenvalue, principal_eigenvalue_at, principal_eigenvalue_curve, solve_ground_state,
    solve_ground_state_with, GroundState,
};
pub use trial::{phi0_from_mode, trial_functional};
