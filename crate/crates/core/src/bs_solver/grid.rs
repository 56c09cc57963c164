use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};
use crate::geometry::WellProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Tensor Gauss–Legendre rule on the support box `(-ρ,ρ) × (-R,R)^{ν-1}`.
    TensorBox,
    /// Gauss–Legendre in the radius times an equal-weight angular rule on
    /// the ball `|ξ| < R` (ν = 2, 3).
    Polar,
}

/// Nodes and weights on one well support, in well-local coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nu: u32,
    kind: GridKind,
    counts: Vec<usize>,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Grid from explicit nodes and positive weights.
    pub fn from_nodes(nu: u32, nodes: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::Domain(format!(
                "{} nodes with {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if nodes.iter().any(|x| x.len() != nu as usize) {
            return Err(Error::Domain(format!("every node needs {nu} coordinates")));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Domain("quadrature weights must be positive".into()));
        }
        Ok(Self {
            nu,
            kind: GridKind::TensorBox,
            counts: vec![nodes.len()],
            nodes,
            weights,
        })
    }

    /// `Σ_p w_p f(ξ_p)`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    /// Radial index of each node on a polar grid (`None` for tensor grids).
    pub(crate) fn radial_index(&self, p: usize) -> Option<usize> {
        match self.kind {
            GridKind::Polar => Some(p / (self.len() / self.counts[0])),
            GridKind::TensorBox => None,
        }
    }
}

/// Gauss–Legendre pairs mapped to `[a, b]`.
pub(crate) fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
    let rule = GaussLegendre::new(n)
        .map_err(|e| Error::Domain(format!("Gauss-Legendre rule with {n} nodes: {e}")))?;
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    let mut pairs: Vec<(f64, f64)> = rule
        .into_node_weight_pairs()
        .into_iter()
        .map(|(x, w)| (c + h * x, h * w))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(pairs)
}

/// Tensor Gauss–Legendre grid on the support box. `n_axis` holds one count
/// per axis, or a single count used for all axes.
pub fn build_grid(p: &WellProfile, n_axis: &[usize]) -> Result<QuadratureGrid> {
    let nu = p.nu() as usize;
    let counts: Vec<usize> = match n_axis.len() {
        1 => vec![n_axis[0]; nu],
        l if l == nu => n_axis.to_vec(),
        l => {
            return Err(Error::Domain(format!("expected 1 or {nu} axis counts, got {l}")));
        }
    };
    if let Some(n) = counts.iter().find(|&&n| n < 2) {
        return Err(Error::Domain(format!("each axis needs at least 2 nodes, got {n}")));
    }
    let mut axes = Vec::with_capacity(nu);
    axes.push(gauss_legendre(counts[0], -p.rho(), p.rho())?);
    for &n in &counts[1..] {
        axes.push(gauss_legendre(n, -p.radius(), p.radius())?);
    }
    let total: usize = counts.iter().product();
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; nu];
    for _ in 0..total {
        nodes.push(idx.iter().enumerate().map(|(d, &i)| axes[d][i].0).collect());
        weights.push(idx.iter().enumerate().map(|(d, &i)| axes[d][i].1).product());
        for d in (0..nu).rev() {
            idx[d] += 1;
            if idx[d] < counts[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(QuadratureGrid {
        nu: p.nu(),
        kind: GridKind::TensorBox,
        counts,
        nodes,
        weights,
    })
}

/// Polar grid on the ball `|ξ| < R` of a radial profile: `n_radial`
/// Gauss–Legendre radii times `n_angular` equally spaced angles (ν = 2), or
/// times `n_angular/2` Gauss–Legendre polar and `n_angular` azimuthal angles
/// (ν = 3). Nodes are ordered radius-major.
pub fn build_polar_grid(p: &WellProfile, n_radial: usize, n_angular: usize) -> Result<QuadratureGrid> {
    if !p.is_radial() {
        return Err(Error::Domain("polar grids need a radial profile".into()));
    }
    if n_radial < 2 || n_angular < 2 {
        return Err(Error::Domain("polar grid needs at least 2 radial and 2 angular nodes".into()));
    }
    let radial = gauss_legendre(n_radial, 0.0, p.radius())?;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let tau = 2.0 * std::f64::consts::PI;
    let counts = match p.nu() {
        2 => {
            let dphi = tau / n_angular as f64;
            for &(r, w) in &radial {
                for k in 0..n_angular {
                    let phi = (k as f64 + 0.5) * dphi;
                    nodes.push(vec![r * phi.cos(), r * phi.sin()]);
                    weights.push(r * w * dphi);
                }
            }
            vec![n_radial, n_angular]
        }
        3 => {
            let n_polar = (n_angular / 2).max(2);
            let polar = gauss_legendre(n_polar, -1.0, 1.0)?;
            let dphi = tau / n_angular as f64;
            for &(r, w) in &radial {
                for &(c, wc) in &polar {
                    let s = (1.0 - c * c).sqrt();
                    for k in 0..n_angular {
                        let phi = (k as f64 + 0.5) * dphi;
                        nodes.push(vec![r * c, r * s * phi.cos(), r * s * phi.sin()]);
                        weights.push(r * r * w * wc * dphi);
                    }
                }
            }
            vec![n_radial, n_polar, n_angular]
        }
        nu => {
            return Err(Error::Domain(format!("polar grids support ν = 2, 3, got {nu}")));
        }
    };
    Ok(QuadratureGrid {
        nu: p.nu(),
        kind: GridKind::Polar,
        counts,
        nodes,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian_integral_oracle() -> f64 {
        // radial oracle: 2π ∫_0^1 V₀ e^{-r²/2σ²} r dr = 2πσ²V₀(1 - e^{-1/(2σ²)})
        2.0 * PI * 0.25 * 5.0 * (1.0 - (-2.0f64).exp())
    }

    #[test]
    fn tensor_grid_counts_and_volume() {
        let p = WellProfile::reference_gaussian();
        let g = build_grid(&p, &[8, 8]).unwrap();
        assert_eq!(g.len(), 64);
        assert!((g.weights().iter().sum::<f64>() - 4.0).abs() < 1e-12 * 4.0);
        assert!(g.weights().iter().all(|&w| w > 0.0));
        assert!(g.nodes().iter().all(|x| x[0].abs() < 1.0 && x[1].abs() < 1.0));
        assert!(build_grid(&p, &[1, 8]).is_err());
    }

    #[test]
    fn tensor_grid_refinement_reduces_error() {
        let p = WellProfile::reference_gaussian();
        let exact = gaussian_integral_oracle();
        let err = |n| (build_grid(&p, &[n]).unwrap().integrate(|x| p.potential(x)) - exact).abs();
        assert!(err(16) < err(8));
    }

    #[test]
    fn polar_grid_integrates_truncated_gaussian() {
        let p = WellProfile::reference_gaussian();
        let g = build_polar_grid(&p, 32, 32).unwrap();
        let v = g.integrate(|x| p.potential(x));
        let exact = gaussian_integral_oracle();
        assert!(((v - exact) / exact).abs() <= 1e-6);
        assert!((g.weights().iter().sum::<f64>() - PI).abs() < 1e-12);
    }

    #[test]
    fn spherical_grid_volume() {
        let params = crate::geometry::ProfileParams {
            nu: 3,
            ..Default::default()
        };
        let p = crate::geometry::make_profile(crate::geometry::ProfileKind::GaussianTruncated, &params)
            .unwrap();
        let g = build_polar_grid(&p, 6, 8).unwrap();
        assert_eq!(g.len(), 6 * 4 * 8);
        assert!((g.weights().iter().sum::<f64>() - 4.0 * PI / 3.0).abs() < 1e-12);
        assert_eq!(g.radial_index(g.len() - 1), Some(5));
    }
}
