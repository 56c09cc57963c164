use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid profile: {0}")]
    Profile(String),

    #[error("spacing error: a = {spacing} must exceed 2ρ = {min}")]
    Spacing { spacing: f64, min: f64 },

    #[error("disjointness error: {0}")]
    Disjointness(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e}): {context}")]
    Convergence {
        iterations: usize,
        residual: f64,
        context: String,
    },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("no negative essential spectrum: band minimum E0 = {0}")]
    NoNegativeSpectrum(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
