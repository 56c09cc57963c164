//! Finite-difference oracle for the whole truncated chain `-Δ - V_Y` on a
//! planar box, with Dirichlet or Neumann walls at the chain ends.
//!
//! The default box is aligned with the periodicity cells of the unperturbed
//! chain, `[(j_min - ½)a, (j_max + ½)a]`. With Neumann walls on those faces
//! the unperturbed chain's ground state is exactly the `θ = 0` Floquet mode,
//! so its energy is the discrete version of the essential threshold.

use crate::bs_solver::SpectralResult;
use crate::error::{Error, Result};
use crate::fd::{cell_average_potential, CellGrid, Face, LongitudinalBc, Stencil};
use crate::floquet::FdNumerics;
use crate::geometry::ArrayGeometry;
use crate::linalg::{lowest_eigenpairs, BandedHermitian, LanczosOptions, ShiftStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndCondition {
    Dirichlet,
    Neumann,
}

impl EndCondition {
    fn face(self) -> Face {
        match self {
            EndCondition::Dirichlet => Face::Dirichlet,
            EndCondition::Neumann => Face::Neumann,
        }
    }
}

/// `[x_min, x_max] × [-L, L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBox {
    pub x_min: f64,
    pub x_max: f64,
    pub transverse_cutoff: f64,
}

impl GridBox {
    /// Box whose end faces are the outer cell boundaries of the reference chain.
    pub fn cell_aligned(g: &ArrayGeometry, transverse_cutoff: f64) -> Self {
        let a = g.spacing();
        Self {
            x_min: (g.first_index() as f64 - 0.5) * a,
            x_max: (g.last_index() as f64 + 0.5) * a,
            transverse_cutoff,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectNumerics {
    pub step: f64,
    pub transverse_cutoff: f64,
    pub subsamples: usize,
    /// Longitudinal extent; `None` selects [`GridBox::cell_aligned`].
    pub box_x: Option<(f64, f64)>,
    /// Eigenvalues requested by [`lowest_eigenvalues`] callers.
    pub k: usize,
    /// A binding energy is flagged inconclusive when the Dirichlet/Neumann
    /// spread exceeds this fraction of it.
    pub spread_tolerance: f64,
}

impl Default for DirectNumerics {
    fn default() -> Self {
        Self {
            step: 0.05,
            transverse_cutoff: 8.0,
            subsamples: 4,
            box_x: None,
            k: 3,
            spread_tolerance: 0.1,
        }
    }
}

impl DirectNumerics {
    pub fn grid_box(&self, g: &ArrayGeometry) -> GridBox {
        match self.box_x {
            Some((x_min, x_max)) => GridBox {
                x_min,
                x_max,
                transverse_cutoff: self.transverse_cutoff,
            },
            None => GridBox::cell_aligned(g, self.transverse_cutoff),
        }
    }
}

/// Discretized chain Hamiltonian. Without transverse shifts the problem is
/// even in `x₂` and is stored as its even and odd sectors on `(0, L)`.
#[derive(Debug, Clone)]
pub struct GridHamiltonian {
    grid: CellGrid,
    end: EndCondition,
    sectors: Vec<BandedHermitian<f64>>,
    lower_bound: f64,
}

impl GridHamiltonian {
    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    pub fn end_condition(&self) -> EndCondition {
        self.end
    }

    /// True when the transverse reflection symmetry was used.
    pub fn is_symmetric_reduced(&self) -> bool {
        self.sectors.len() == 2
    }

    /// Matrix of the symmetric sector (or of the full problem).
    pub fn matrix(&self) -> &BandedHermitian<f64> {
        &self.sectors[0]
    }
}

fn build(
    g: &ArrayGeometry,
    bx: &GridBox,
    h: f64,
    end: EndCondition,
    subsamples: usize,
    potential_scale: f64,
) -> Result<GridHamiltonian> {
    let profile = g.profile();
    FdNumerics {
        transverse_cutoff: bx.transverse_cutoff,
        step: h,
        subsamples,
    }
    .validate(profile)?;
    let a = g.spacing();
    let r = profile.radius();
    let centers = g.centers();
    let tol = 1e-9 * a;
    for c in &centers {
        if c[0] - a / 2.0 < bx.x_min - tol || c[0] + a / 2.0 > bx.x_max + tol {
            return Err(Error::Config(format!(
                "box [{}, {}] leaves less than a/2 around the well at x = {}",
                bx.x_min, bx.x_max, c[0]
            )));
        }
        if bx.transverse_cutoff < c[1].abs() + 5.0 * r - tol {
            return Err(Error::Config(format!(
                "transverse cutoff {} leaves less than 4R beyond the well at x_perp = {}",
                bx.transverse_cutoff, c[1]
            )));
        }
    }
    let width = bx.x_max - bx.x_min;
    let nx = (width / h).round() as usize;
    if nx < 3 || (nx as f64 * h - width).abs() > 1e-6 * h {
        return Err(Error::Config(format!(
            "box length {width} is not a multiple of the grid step {h}"
        )));
    }
    let m = (bx.transverse_cutoff / h - 1e-9).ceil() as usize;
    let symmetric = !g.has_transversal_shift();
    let grid = CellGrid {
        h,
        x0: bx.x_min,
        nx,
        y0: if symmetric { 0.0 } else { -(m as f64) * h },
        ny: if symmetric { m } else { 2 * m },
    };
    let wells: Vec<(f64, f64)> = centers.iter().map(|c| (c[0], c[1])).collect();
    let mut pot = cell_average_potential(&grid, profile, &wells, subsamples);
    pot.iter_mut().for_each(|v| *v *= potential_scale);
    let longitudinal = LongitudinalBc::Walls {
        left: end.face(),
        right: end.face(),
    };
    let bottoms: &[Face] = if symmetric {
        &[Face::Neumann, Face::Dirichlet]
    } else {
        &[Face::Dirichlet]
    };
    let sectors = bottoms
        .iter()
        .map(|&bottom| {
            Stencil {
                grid,
                longitudinal,
                bottom,
                top: Face::Dirichlet,
            }
            .assemble_real(&pot)
        })
        .collect();
    Ok(GridHamiltonian {
        grid,
        end,
        sectors,
        lower_bound: -profile.max_potential() * potential_scale - 1.0,
    })
}

pub fn assemble_hamiltonian(
    g: &ArrayGeometry,
    bx: &GridBox,
    h: f64,
    end: EndCondition,
    subsamples: usize,
) -> Result<GridHamiltonian> {
    build(g, bx, h, end, subsamples, 1.0)
}

fn strategy(h: &GridHamiltonian, hint: Option<f64>) -> ShiftStrategy {
    match hint {
        Some(e) => ShiftStrategy::Hint(e),
        None => ShiftStrategy::LowerBound(h.lower_bound),
    }
}

/// The `k` smallest eigenvalues in nondecreasing order. `hint` is an
/// estimate of the lowest one and only affects speed.
pub fn lowest_eigenvalues(h: &GridHamiltonian, k: usize, hint: Option<f64>) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let mut all = Vec::new();
    for a in &h.sectors {
        let e = lowest_eigenpairs(a, k.min(a.dim()), strategy(h, hint), &LanczosOptions::default())?;
        all.extend(e.values);
    }
    all.sort_by(f64::total_cmp);
    all.truncate(k);
    Ok(all)
}

/// Lowest eigenvalue. The positive ground state is even in `x₂`, so only the
/// symmetric sector is solved.
pub fn ground_energy(h: &GridHamiltonian, hint: Option<f64>) -> Result<f64> {
    let e = lowest_eigenpairs(&h.sectors[0], 1, strategy(h, hint), &LanczosOptions::default())?;
    Ok(e.values[0])
}

/// Ground energies of the unperturbed chain for both end conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainThreshold {
    pub neumann: f64,
    pub dirichlet: f64,
}

impl ChainThreshold {
    pub fn spread(&self) -> f64 {
        self.dirichlet - self.neumann
    }
}

pub fn chain_threshold(g: &ArrayGeometry, numerics: &DirectNumerics) -> Result<ChainThreshold> {
    let g0 = g.unperturbed();
    let bx = numerics.grid_box(&g0);
    let hn = assemble_hamiltonian(&g0, &bx, numerics.step, EndCondition::Neumann, numerics.subsamples)?;
    let neumann = ground_energy(&hn, None)?;
    drop(hn);
    let hd = assemble_hamiltonian(&g0, &bx, numerics.step, EndCondition::Dirichlet, numerics.subsamples)?;
    let dirichlet = ground_energy(&hd, Some(neumann))?;
    Ok(ChainThreshold { neumann, dirichlet })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectBinding {
    /// Binding measured against the Neumann-end unperturbed chain.
    pub result: SpectralResult,
    pub threshold: ChainThreshold,
    /// Ground energies of the perturbed chain.
    pub neumann_energy: f64,
    pub dirichlet_energy: f64,
    /// `|E_D - E_N|` of the perturbed chain, the truncation-error estimate.
    pub dn_spread: f64,
    /// Set when the spread exceeds the requested fraction of the binding.
    pub inconclusive: bool,
}

pub fn binding_energy_direct(g: &ArrayGeometry, numerics: &DirectNumerics) -> Result<DirectBinding> {
    let threshold = chain_threshold(g, numerics)?;
    binding_with_threshold(g, numerics, threshold)
}

/// As [`binding_energy_direct`] with a precomputed unperturbed threshold,
/// which a displacement scan shares across all points.
pub fn binding_with_threshold(
    g: &ArrayGeometry,
    numerics: &DirectNumerics,
    threshold: ChainThreshold,
) -> Result<DirectBinding> {
    let bx = numerics.grid_box(&g.unperturbed());
    let (neumann_energy, dirichlet_energy, iterations) = if g.perturbation_window() == 0
        && g.shift_kind() == crate::geometry::ShiftKind::Unperturbed
    {
        (threshold.neumann, threshold.dirichlet, 0)
    } else {
        let hn = assemble_hamiltonian(g, &bx, numerics.step, EndCondition::Neumann, numerics.subsamples)?;
        let en = ground_energy(&hn, Some(threshold.neumann))?;
        drop(hn);
        let hd =
            assemble_hamiltonian(g, &bx, numerics.step, EndCondition::Dirichlet, numerics.subsamples)?;
        let ed = ground_energy(&hd, Some(en))?;
        (en, ed, 2)
    };
    let binding = (threshold.neumann - neumann_energy).max(0.0);
    let dn_spread = (dirichlet_energy - neumann_energy).abs();
    let energy = neumann_energy.min(threshold.neumann);
    Ok(DirectBinding {
        result: SpectralResult {
            kappa_star: (-energy).max(0.0).sqrt(),
            energy,
            threshold_energy: threshold.neumann,
            binding_energy: binding,
            converged: true,
            iterations,
        },
        threshold,
        neumann_energy,
        dirichlet_energy,
        dn_spread,
        inconclusive: binding > 0.0 && dn_spread > numerics.spread_tolerance * binding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_array, WellProfile};
    use std::f64::consts::PI;

    fn coarse() -> DirectNumerics {
        DirectNumerics {
            step: 0.1,
            transverse_cutoff: 6.0,
            ..DirectNumerics::default()
        }
    }

    fn single() -> ArrayGeometry {
        build_array(&WellProfile::reference_gaussian(), 5.0, 1).unwrap()
    }

    #[test]
    fn empty_box_matches_analytic_mode() {
        let g = single();
        let bx = GridBox {
            x_min: -2.5,
            x_max: 2.5,
            transverse_cutoff: 6.0,
        };
        let w = bx.x_max - bx.x_min;
        let h = build(&g, &bx, w / 200.0, EndCondition::Dirichlet, 2, 0.0).unwrap();
        let e = lowest_eigenvalues(&h, 1, None).unwrap()[0];
        let exact = PI * PI * (1.0 / (w * w) + 1.0 / (2.0 * 6.0f64).powi(2));
        assert!(((e - exact) / exact).abs() < 0.01);
    }

    #[test]
    fn matrix_is_symmetric() {
        let g = build_array(&WellProfile::reference_gaussian(), 5.0, 3)
            .unwrap()
            .shift_well(0, 0.4, &[0.3])
            .unwrap();
        let h = assemble_hamiltonian(&g, &coarse().grid_box(&g), 0.1, EndCondition::Neumann, 2).unwrap();
        assert!(!h.is_symmetric_reduced());
        let a = h.matrix();
        for i in (0..a.dim()).step_by(97) {
            for j in i.saturating_sub(a.bandwidth())..(i + a.bandwidth() + 1).min(a.dim()) {
                assert_eq!(a.get(i, j), a.get(j, i));
            }
        }
    }

    #[test]
    fn neumann_below_dirichlet_and_sorted() {
        let g = build_array(&WellProfile::reference_gaussian(), 5.0, 3).unwrap();
        let n = coarse();
        let bx = n.grid_box(&g);
        let hn = assemble_hamiltonian(&g, &bx, n.step, EndCondition::Neumann, 4).unwrap();
        let hd = assemble_hamiltonian(&g, &bx, n.step, EndCondition::Dirichlet, 4).unwrap();
        let en = lowest_eigenvalues(&hn, 3, None).unwrap();
        let ed = lowest_eigenvalues(&hd, 3, None).unwrap();
        assert!(en[0] <= ed[0]);
        assert!(en.windows(2).all(|w| w[0] <= w[1]));
        assert!(en[0] < 0.0);
        assert!((ground_energy(&hn, None).unwrap() - en[0]).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_boxes() {
        let g = single();
        let n = coarse();
        let mut bx = n.grid_box(&g);
        bx.x_max = 1.0;
        assert!(matches!(
            assemble_hamiltonian(&g, &bx, 0.1, EndCondition::Neumann, 4),
            Err(Error::Config(_))
        ));
        let bx = n.grid_box(&g);
        assert!(assemble_hamiltonian(&g, &bx, 0.3, EndCondition::Neumann, 4).is_err());
        assert!(assemble_hamiltonian(&g, &bx, 0.07, EndCondition::Neumann, 4).is_err());
    }

    #[test]
    fn zero_shift_binds_nothing() {
        let g = build_array(&WellProfile::reference_gaussian(), 5.0, 3).unwrap();
        let b = binding_energy_direct(&g, &coarse()).unwrap();
        assert_eq!(b.result.binding_energy, 0.0);
        assert_eq!(b.neumann_energy, b.threshold.neumann);
    }
}
