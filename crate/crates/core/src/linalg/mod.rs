//! Banded Hermitian storage, its Cholesky factorization and Lanczos
//! eigensolvers used by the grid and integral-operator solvers.

mod banded;
mod lanczos;
mod scalar;

pub use banded::{BandCholesky, BandedHermitian};
pub use lanczos::{largest_eigenpairs, lowest_eigenpairs, EigenPairs, LanczosOptions, ShiftStrategy};
pub use scalar::Scalar;
