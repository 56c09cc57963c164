//! Cell-centred five-point discretization of `-Δ - V` on planar rectangles.
//!
//! Unknowns sit at cell centres `x₀ + (i + ½)h`. Walls are imposed by ghost
//! reflection: a Neumann face contributes `1/h²` to the adjacent diagonal,
//! a Dirichlet face `3/h²`. The potential enters as its cell average over a
//! `sub × sub` midpoint sample, which keeps the truncated Gaussian's jump at
//! `|x| = R` from spoiling second-order convergence.

use num_complex::Complex64;

use crate::geometry::WellProfile;
use crate::linalg::{BandedHermitian, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    Dirichlet,
    Neumann,
}

impl Face {
    /// Diagonal contribution (in units of `1/h²`) of a cell touching this face.
    fn boundary_diagonal(self) -> f64 {
        match self {
            Face::Dirichlet => 3.0,
            Face::Neumann => 1.0,
        }
    }
}

/// Longitudinal closure of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LongitudinalBc {
    Walls { left: Face, right: Face },
    /// Periodic in `x₁` with the momentum shift `k`: the operator is
    /// `(-i∂₁ - k)² - ∂₂² - V`.
    Periodic { k: f64 },
}

/// Uniform cell grid on `[x0, x0 + nx h] × [y0, y0 + ny h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGrid {
    pub h: f64,
    pub x0: f64,
    pub nx: usize,
    pub y0: f64,
    pub ny: usize,
}

impl CellGrid {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + (j as f64 + 0.5) * self.h
    }

    /// Range of cell indices along one axis whose cells meet `[lo, hi]`.
    fn cells_meeting(start: f64, h: f64, n: usize, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = ((lo - start) / h).floor().max(0.0) as usize;
        let b = (((hi - start) / h).ceil().max(0.0) as usize).min(n);
        a.min(b)..b
    }
}

/// Cell averages of `λV` for wells with the given centres, laid out as
/// `values[ix * ny + iy]`. Wells are placed at `(c₁, c₂)`.
pub fn cell_average_potential(
    grid: &CellGrid,
    profile: &WellProfile,
    centers: &[(f64, f64)],
    sub: usize,
) -> Vec<f64> {
    let mut values = vec![0.0; grid.len()];
    let ext_x = profile.rho().max(profile.radius());
    let ext_y = profile.radius();
    let inv = 1.0 / (sub * sub) as f64;
    for &(cx, cy) in centers {
        let xs = CellGrid::cells_meeting(grid.x0, grid.h, grid.nx, cx - ext_x, cx + ext_x);
        let ys = CellGrid::cells_meeting(grid.y0, grid.h, grid.ny, cy - ext_y, cy + ext_y);
        for ix in xs {
            for iy in ys.clone() {
                let mut acc = 0.0;
                for a in 0..sub {
                    let x = grid.x0 + grid.h * (ix as f64 + (a as f64 + 0.5) / sub as f64);
                    for b in 0..sub {
                        let y = grid.y0 + grid.h * (iy as f64 + (b as f64 + 0.5) / sub as f64);
                        acc += profile.potential(&[x - cx, y - cy]);
                    }
                }
                values[ix * grid.ny + iy] += acc * inv;
            }
        }
    }
    values
}

/// Full description of a discretized rectangle problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub grid: CellGrid,
    pub longitudinal: LongitudinalBc,
    pub bottom: Face,
    pub top: Face,
}

impl Stencil {
    /// Real symmetric matrix, transverse index fastest (bandwidth `ny`).
    /// Periodic closures are not representable in this ordering.
    pub fn assemble_real(&self, potential: &[f64]) -> BandedHermitian<f64> {
        let LongitudinalBc::Walls { left, right } = self.longitudinal else {
            panic!("real transverse-fastest assembly needs wall closures");
        };
        let g = &self.grid;
        let inv_h2 = 1.0 / (g.h * g.h);
        let mut a = BandedHermitian::zeros(g.len(), g.ny);
        for ix in 0..g.nx {
            for iy in 0..g.ny {
                let p = ix * g.ny + iy;
                let dx = self.axis_diagonal(ix, g.nx, left, right);
                let dy = self.axis_diagonal(iy, g.ny, self.bottom, self.top);
                a.set(p, p, (dx + dy) * inv_h2 - potential[p]);
                if iy > 0 {
                    a.set(p, p - 1, -inv_h2);
                }
                if ix > 0 {
                    a.set(p, p - g.ny, -inv_h2);
                }
            }
        }
        a
    }

    /// Hermitian matrix, longitudinal index fastest (bandwidth `nx`), which
    /// admits the periodic wrap.
    pub fn assemble_complex(&self, potential: &[f64]) -> BandedHermitian<Complex64> {
        let g = &self.grid;
        let inv_h2 = 1.0 / (g.h * g.h);
        let mut a = BandedHermitian::zeros(g.len(), g.nx);
        // coefficient of u_{i+1} in row i
        let (forward, wrap, walls) = match self.longitudinal {
            LongitudinalBc::Periodic { k } => {
                (Complex64::new(-(k * g.h).cos(), (k * g.h).sin()) * inv_h2, true, None)
            }
            LongitudinalBc::Walls { left, right } => {
                (Complex64::new(-inv_h2, 0.0), false, Some((left, right)))
            }
        };
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                let p = iy * g.nx + ix;
                let dx = match walls {
                    Some((l, r)) => self.axis_diagonal(ix, g.nx, l, r),
                    None => 2.0,
                };
                let dy = self.axis_diagonal(iy, g.ny, self.bottom, self.top);
                let v = potential[ix * g.ny + iy];
                a.set(p, p, Complex64::from_real((dx + dy) * inv_h2 - v));
                if ix + 1 < g.nx {
                    a.add(p, p + 1, forward);
                } else if wrap {
                    a.add(p, iy * g.nx, forward);
                }
                if iy + 1 < g.ny {
                    a.add(p, p + g.nx, Complex64::new(-inv_h2, 0.0));
                }
            }
        }
        a
    }

    fn axis_diagonal(&self, i: usize, n: usize, lo: Face, hi: Face) -> f64 {
        if n == 1 {
            return lo.boundary_diagonal() + hi.boundary_diagonal() - 2.0;
        }
        if i == 0 {
            lo.boundary_diagonal()
        } else if i + 1 == n {
            hi.boundary_diagonal()
        } else {
            2.0
        }
    }
}
