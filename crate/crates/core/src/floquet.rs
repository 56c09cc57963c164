//! Band structure of the straight periodic array through its fiber
//! operators `H_V(θ)` on one periodicity cell `(-a/2, a/2) × (-L, L)`.
//!
//! The fiber is written in momentum-shift form, `(-i∂₁ - θ/a)² - ∂₂² - V`
//! with plain periodic conditions in `x₁`. Every supported profile is even
//! in `x₂`, so each fiber splits into an even and an odd transverse sector,
//! each discretized on `(0, L)` with a Neumann or Dirichlet face at `x₂ = 0`.
//! The quasimomentum θ is dimensionless and lives in `[-π, π)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fd::{cell_average_potential, CellGrid, Face, LongitudinalBc, Stencil};
use crate::geometry::{WellProfile, WellShape};
use crate::linalg::{lowest_eigenpairs, BandedHermitian, LanczosOptions, ShiftStrategy};

/// Grid parameters shared by the fiber and chain discretizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdNumerics {
    /// Transverse half-width `L` of the truncated slab.
    pub transverse_cutoff: f64,
    /// Target grid step; the actual step is adjusted down to fit the cell.
    pub step: f64,
    /// Sub-samples per cell side for potential averaging.
    pub subsamples: usize,
}

impl Default for FdNumerics {
    fn default() -> Self {
        Self {
            transverse_cutoff: 8.0,
            step: 0.05,
            subsamples: 4,
        }
    }
}

impl FdNumerics {
    pub(crate) fn validate(&self, profile: &WellProfile) -> Result<()> {
        if !(self.step > 0.0) || !(self.transverse_cutoff > 0.0) || self.subsamples == 0 {
            return Err(Error::Config(format!("invalid grid numerics {self:?}")));
        }
        if self.transverse_cutoff < 4.0 * profile.radius() {
            return Err(Error::Config(format!(
                "transverse cutoff L = {} must be at least 4R = {}",
                self.transverse_cutoff,
                4.0 * profile.radius()
            )));
        }
        if let WellShape::GaussianTruncated { sigma, .. } = profile.shape() {
            if self.step > sigma / 2.0 {
                return Err(Error::Config(format!(
                    "grid step {} too coarse for sigma = {sigma} (need h <= sigma/2)",
                    self.step
                )));
            }
        }
        if profile.nu() != 2 {
            return Err(Error::Config("grid solvers support dimension 2 only".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberProblem {
    profile: WellProfile,
    spacing: f64,
    theta: f64,
    numerics: FdNumerics,
}

impl FiberProblem {
    pub fn new(profile: &WellProfile, spacing: f64, theta: f64, numerics: FdNumerics) -> Result<Self> {
        numerics.validate(profile)?;
        if !(spacing > 2.0 * profile.rho()) {
            return Err(Error::Spacing {
                spacing,
                min: 2.0 * profile.rho(),
            });
        }
        if !theta.is_finite() || theta.abs() > std::f64::consts::PI + 1e-12 {
            return Err(Error::Domain(format!("quasimomentum {theta} outside [-π, π]")));
        }
        Ok(Self {
            profile: profile.clone(),
            spacing,
            theta,
            numerics,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    fn nx(&self) -> usize {
        (self.spacing / self.numerics.step - 1e-9).ceil() as usize
    }

    fn step(&self) -> f64 {
        self.spacing / self.nx() as f64
    }

    fn half_cells(&self) -> usize {
        (self.numerics.transverse_cutoff / self.step() - 1e-9).ceil() as usize
    }

    fn grid(&self, full: bool) -> CellGrid {
        let h = self.step();
        let m = self.half_cells();
        CellGrid {
            h,
            x0: -self.spacing / 2.0,
            nx: self.nx(),
            y0: if full { -(m as f64) * h } else { 0.0 },
            ny: if full { 2 * m } else { m },
        }
    }

    fn stencil(&self, grid: CellGrid, bottom: Face) -> Stencil {
        Stencil {
            grid,
            longitudinal: LongitudinalBc::Periodic {
                k: self.theta / self.spacing,
            },
            bottom,
            top: Face::Dirichlet,
        }
    }

    fn potential(&self, grid: &CellGrid) -> Vec<f64> {
        cell_average_potential(grid, &self.profile, &[(0.0, 0.0)], self.numerics.subsamples)
    }

    /// Discretization of one transverse-parity sector on `(0, L)`.
    pub fn assemble_sector(&self, parity: Parity) -> (CellGrid, BandedHermitian<Complex64>) {
        let grid = self.grid(false);
        let bottom = match parity {
            Parity::Even => Face::Neumann,
            Parity::Odd => Face::Dirichlet,
        };
        let a = self.stencil(grid, bottom).assemble_complex(&self.potential(&grid));
        (grid, a)
    }

    fn lower_bound(&self) -> f64 {
        -self.profile.max_potential() - 1.0
    }

    fn lowest(&self, parity: Parity, k: usize) -> Result<(CellGrid, Vec<f64>, Vec<Complex64>)> {
        let (grid, a) = self.assemble_sector(parity);
        let k = k.min(a.dim());
        let e = lowest_eigenpairs(
            &a,
            k,
            ShiftStrategy::LowerBound(self.lower_bound()),
            &LanczosOptions::default(),
        )
        .map_err(|e| match e {
            Error::Convergence {
                iterations,
                residual,
                context,
            } => Error::Convergence {
                iterations,
                residual,
                context: format!("{context} (fiber at θ = {})", self.theta),
            },
            other => other,
        })?;
        let ground = e.vectors.into_iter().next().unwrap_or_default();
        Ok((grid, e.values, ground))
    }

    /// The `k` lowest eigenvalues over both parity sectors, increasing.
    pub fn lowest_eigenvalues(&self, k: usize) -> Result<Vec<f64>> {
        let mut all = self.lowest(Parity::Even, k)?.1;
        all.extend(self.lowest(Parity::Odd, k)?.1);
        all.sort_by(f64::total_cmp);
        all.truncate(k);
        Ok(all)
    }
}

/// Finite-difference matrix of the fiber on the full slab `J_a × (-L, L)`
/// with Dirichlet faces at `|x₂| = L`.
pub fn assemble_fiber(fp: &FiberProblem) -> BandedHermitian<Complex64> {
    let grid = fp.grid(true);
    fp.stencil(grid, Face::Dirichlet)
        .assemble_complex(&fp.potential(&grid))
}

/// `n` equispaced quasimomenta `-π + 2πm/n`, symmetric about 0 for even `n`.
pub fn brillouin_grid(n: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    (0..n).map(|m| -PI + 2.0 * PI * m as f64 / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandStructure {
    pub thetas: Vec<f64>,
    /// `energies[t][b]`: the `b`-th lowest fiber eigenvalue at `thetas[t]`.
    pub energies: Vec<Vec<f64>>,
    /// `(min, max)` of each band over the sampled quasimomenta.
    pub band_edges: Vec<(f64, f64)>,
}

impl BandStructure {
    fn from_samples(thetas: Vec<f64>, energies: Vec<Vec<f64>>) -> Self {
        let n_bands = energies.iter().map(Vec::len).min().unwrap_or(0);
        let band_edges = (0..n_bands)
            .map(|b| {
                energies.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
                    (lo.min(e[b]), hi.max(e[b]))
                })
            })
            .collect();
        Self {
            thetas,
            energies,
            band_edges,
        }
    }

    /// Bottom of the lowest band.
    pub fn lower_edge(&self) -> f64 {
        self.band_edges.first().map_or(f64::NAN, |e| e.0)
    }

    /// True when the highest computed band reaches `[0, ∞)`, so that every
    /// negative band has been resolved.
    pub fn covers_negative_axis(&self) -> bool {
        self.band_edges.last().is_some_and(|e| e.1 >= 0.0)
    }

    /// Negative eigenvalues at each sampled quasimomentum.
    pub fn negative_counts(&self) -> Vec<usize> {
        self.energies
            .iter()
            .map(|e| e.iter().filter(|&&x| x < 0.0).count())
            .collect()
    }
}

/// The `n_bands` lowest bands sampled on `thetas`, in parallel over θ.
pub fn lowest_band(
    profile: &WellProfile,
    spacing: f64,
    numerics: FdNumerics,
    thetas: &[f64],
    n_bands: usize,
) -> Result<BandStructure> {
    if n_bands == 0 {
        return Err(Error::Config("at least one band is required".into()));
    }
    let energies = thetas
        .par_iter()
        .map(|&t| FiberProblem::new(profile, spacing, t, numerics)?.lowest_eigenvalues(n_bands))
        .collect::<Result<Vec<_>>>()?;
    Ok(BandStructure::from_samples(thetas.to_vec(), energies))
}

/// Positive ground state of the `θ = 0` fiber on the cell grid (even sector),
/// normalized in `L²` of the full cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdMode {
    grid: CellGrid,
    spacing: f64,
    /// `values[iy * nx + ix]` on the half-slab grid.
    values: Vec<f64>,
}

impl ThresholdMode {
    /// Bilinear interpolation at a point of the cell, `x₁` taken modulo `a`.
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        let g = &self.grid;
        let a = self.spacing;
        let x = (x1 + a / 2.0).rem_euclid(a) - a / 2.0;
        // fractional cell-centre coordinates; x wraps periodically
        let u = (x - g.x0) / g.h - 0.5;
        let v = (x2.abs() - g.y0) / g.h - 0.5;
        let i0 = u.floor();
        let fu = u - i0;
        let wrap = |i: f64| (i as i64).rem_euclid(g.nx as i64) as usize;
        let (ia, ib) = (wrap(i0), wrap(i0 + 1.0));
        // even reflection: flat between the first centres at ±h/2
        let (ja, jb, fv) = if v < 0.0 {
            (0, 0, 0.0)
        } else if v >= (g.ny - 1) as f64 {
            (g.ny - 1, g.ny - 1, 0.0)
        } else {
            let j0 = v.floor() as usize;
            (j0, j0 + 1, v - j0 as f64)
        };
        let at = |i: usize, j: usize| self.values[j * g.nx + i];
        (1.0 - fv) * ((1.0 - fu) * at(ia, ja) + fu * at(ib, ja))
            + fv * ((1.0 - fu) * at(ia, jb) + fu * at(ib, jb))
    }

    /// Values at well-local nodes `ξ = (ξ₁, ξ₂)`.
    pub fn sample(&self, nodes: &[Vec<f64>]) -> Vec<f64> {
        nodes.iter().map(|p| self.eval(p[0], p[1])).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    /// `E₀ = inf σ_ess`, the bottom of the lowest band.
    pub energy: f64,
    /// `κ₀ = √(-E₀)`.
    pub kappa0: f64,
    pub mode: ThresholdMode,
}

/// Essential-spectrum threshold of the infinite array. For mirror-symmetric
/// wells the lowest band bottoms out at `θ = 0`, so only that fiber is solved.
pub fn essential_threshold(profile: &WellProfile, spacing: f64, numerics: FdNumerics) -> Result<Threshold> {
    let fp = FiberProblem::new(profile, spacing, 0.0, numerics)?;
    let (grid, values, vector) = fp.lowest(Parity::Even, 1)?;
    let energy = values[0];
    if energy >= 0.0 {
        return Err(Error::NoNegativeSpectrum(energy));
    }
    // remove the arbitrary global phase, then fix the sign
    let pivot = vector
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap_or(Complex64::new(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm();
    let mut real: Vec<f64> = vector.iter().map(|z| (z * phase).re).collect();
    let norm2: f64 = 2.0 * real.iter().map(|v| v * v).sum::<f64>() * grid.h * grid.h;
    let scale = 1.0 / norm2.sqrt();
    real.iter_mut().for_each(|v| *v *= scale);
    Ok(Threshold {
        energy,
        kappa0: (-energy).sqrt(),
        mode: ThresholdMode {
            grid,
            spacing,
            values: real,
        },
    })
}

/// Number of open intervals of `(E₀, 0)` not covered by any band.
pub fn count_gaps(b: &BandStructure) -> usize {
    let mut ranges: Vec<(f64, f64)> = b
        .band_edges
        .iter()
        .filter(|e| e.0 < 0.0)
        .map(|&(lo, hi)| (lo, hi.min(0.0)))
        .collect();
    ranges.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut gaps = 0;
    let mut covered_to = match ranges.first() {
        Some(r) => r.1,
        None => return 0,
    };
    for r in &ranges[1..] {
        if r.0 > covered_to {
            gaps += 1;
        }
        covered_to = covered_to.max(r.1);
    }
    if covered_to < 0.0 {
        gaps += 1;
    }
    gaps
}
