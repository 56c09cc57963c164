//! Spectral toolkit for Schrödinger operators `-Δ - Σ_j V_j` with arrays of
//! compactly supported potential wells placed along a line.

pub mod bs_solver;
pub mod checks;
pub mod cli;
pub mod direct_solver;
pub mod error;
pub mod fd;
pub mod floquet;
pub mod geometry;
pub mod linalg;
pub mod specialfn;

pub use error::{Error, Result};
