use nalgebra::{DVectorView, DVectorViewMut};
use rayon::prelude::*;

use super::assemble::{assemble_operator, BSBlockOperator, BsNumerics};
use super::grid::QuadratureGrid;
use super::SpectralResult;
use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::linalg::{largest_eigenpairs, LanczosOptions};

const EIGEN_TOL: f64 = 1e-10;
const ROOT_TOL: f64 = 1e-8;
const MAX_BISECTIONS: usize = 200;

/// Largest eigenvalue `μ_max` of the assembled operator.
pub fn principal_eigenvalue(op: &BSBlockOperator) -> Result<f64> {
    let a = op.matrix();
    let n = a.nrows();
    if n == 1 {
        return Ok(a[(0, 0)]);
    }
    let start = vec![1.0; n];
    let apply = |x: &[f64], y: &mut [f64]| {
        let mut out = DVectorViewMut::from_slice(y, n);
        out.gemv(1.0, a, &DVectorView::from_slice(x, n), 0.0);
    };
    let opts = LanczosOptions {
        tol: EIGEN_TOL,
        ..LanczosOptions::default()
    };
    let pairs = largest_eigenpairs(
        n,
        1,
        apply,
        |theta: f64, r: f64| r <= EIGEN_TOL * theta.abs(),
        Some(&start),
        &opts,
    )?;
    Ok(pairs.values[0])
}

/// `μ_max(K(κ))` for one geometry at one `κ`.
pub fn principal_eigenvalue_at(
    g: &ArrayGeometry,
    q: &QuadratureGrid,
    kappa: f64,
    numerics: &BsNumerics,
) -> Result<f64> {
    principal_eigenvalue(&assemble_operator(g, q, kappa, numerics)?)
}

/// `μ_max` on a list of `κ` values, computed in parallel.
pub fn principal_eigenvalue_curve(
    g: &ArrayGeometry,
    q: &QuadratureGrid,
    kappas: &[f64],
    numerics: &BsNumerics,
) -> Result<Vec<f64>> {
    kappas
        .par_iter()
        .map(|&k| principal_eigenvalue_at(g, q, k, numerics))
        .collect()
}

/// Outcome of [`solve_ground_state`].
#[derive(Debug, Clone, PartialEq)]
pub enum GroundState {
    Bound(SpectralResult),
    /// `μ_max(κ_lo) ≤ 1`: no eigenvalue below `-κ_lo²`.
    NoBoundState { mu_lo: f64 },
}

impl GroundState {
    pub fn bound(&self) -> Option<&SpectralResult> {
        match self {
            GroundState::Bound(r) => Some(r),
            GroundState::NoBoundState { .. } => None,
        }
    }

    /// Binding energy, zero when there is no level in the bracket.
    pub fn binding_energy(&self) -> f64 {
        self.bound().map_or(0.0, |r| r.binding_energy)
    }
}

/// Bisection for `μ_max(K(κ*)) = 1` on `[kappa_lo, kappa_hi]`; the
/// threshold `κ₀` only enters the reported energies.
pub fn solve_ground_state(
    g: &ArrayGeometry,
    q: &QuadratureGrid,
    kappa_lo: f64,
    kappa_hi: f64,
    threshold_kappa: f64,
) -> Result<GroundState> {
    solve_ground_state_with(g, q, kappa_lo, kappa_hi, threshold_kappa, &BsNumerics::default())
}

pub fn solve_ground_state_with(
    g: &ArrayGeometry,
    q: &QuadratureGrid,
    kappa_lo: f64,
    kappa_hi: f64,
    threshold_kappa: f64,
    numerics: &BsNumerics,
) -> Result<GroundState> {
    if !(kappa_lo > 0.0 && kappa_hi > kappa_lo && kappa_hi.is_finite()) {
        return Err(Error::Domain(format!(
            "invalid bracket [{kappa_lo}, {kappa_hi}]"
        )));
    }
    if !(threshold_kappa > 0.0) {
        return Err(Error::Domain(format!(
            "threshold kappa must be positive, got {threshold_kappa}"
        )));
    }
    let mu = |k: f64| principal_eigenvalue_at(g, q, k, numerics);
    let mu_lo = mu(kappa_lo)?;
    if mu_lo <= 1.0 {
        return Ok(GroundState::NoBoundState { mu_lo });
    }
    let mu_hi = mu(kappa_hi)?;
    if mu_hi >= 1.0 {
        return Err(Error::Domain(format!(
            "mu_max({kappa_hi}) = {mu_hi} >= 1: the root lies above the bracket"
        )));
    }
    let (mut lo, mut hi) = (kappa_lo, kappa_hi);
    let mut mid = 0.5 * (lo + hi);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS {
        iterations += 1;
        mid = 0.5 * (lo + hi);
        let m = mu(mid)?;
        if (m - 1.0).abs() <= ROOT_TOL {
            converged = true;
            break;
        }
        if m > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let k0 = threshold_kappa;
    Ok(GroundState::Bound(SpectralResult {
        kappa_star: mid,
        energy: -mid * mid,
        threshold_energy: -k0 * k0,
        binding_energy: (mid * mid - k0 * k0).max(0.0),
        converged,
        iterations,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bs_solver::assemble::SelfTerm;
    use crate::bs_solver::grid::build_polar_grid;
    use crate::geometry::{build_array, WellProfile};
    use crate::specialfn::KernelParams;
    use nalgebra::DMatrix;

    fn single() -> (ArrayGeometry, QuadratureGrid) {
        let p = WellProfile::reference_gaussian();
        (build_array(&p, 5.0, 1).unwrap(), build_polar_grid(&p, 12, 24).unwrap())
    }

    #[test]
    fn principal_eigenvalue_of_known_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let mu = principal_eigenvalue(&BSBlockOperator::from_matrix(1.0, m)).unwrap();
        assert!((mu - (2.0 + 2f64.sqrt())).abs() < 1e-10);
    }

    #[test]
    fn one_node_is_the_scalar_self_cell() {
        let p = WellProfile::reference_gaussian();
        let g = build_array(&p, 5.0, 1).unwrap();
        let (w, x) = (0.3, vec![0.1, 0.2]);
        let q = QuadratureGrid::from_nodes(2, vec![x.clone()], vec![w]).unwrap();
        let numerics = BsNumerics {
            self_term: SelfTerm::BallAverage,
            ..BsNumerics::default()
        };
        let kappa = 0.9;
        let op = assemble_operator(&g, &q, kappa, &numerics).unwrap();
        let eps = (w / std::f64::consts::PI).sqrt();
        let expected = p.potential(&x) * KernelParams::new(2, kappa).unwrap().ball_integral(eps).unwrap();
        assert!((principal_eigenvalue(&op).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn mu_decreases_in_kappa() {
        let (g, q) = single();
        let n = BsNumerics::default();
        let mus = principal_eigenvalue_curve(&g, &q, &[0.5, 1.0, 2.0, 10.0], &n).unwrap();
        assert!(mus[0] > mus[1] && mus[1] > mus[2]);
        assert!(mus[3] < 0.05 * mus[0]);
    }

    #[test]
    fn quadrature_refinement_is_stable() {
        let p = WellProfile::reference_gaussian();
        let g = build_array(&p, 5.0, 1).unwrap();
        let n = BsNumerics::default();
        let mu = |nr| {
            let q = build_polar_grid(&p, nr, nr).unwrap();
            principal_eigenvalue_at(&g, &q, 0.85, &n).unwrap()
        };
        assert!((mu(24) - mu(32)).abs() <= 1e-4);
    }

    #[test]
    fn single_well_root() {
        let (g, q) = single();
        let gs = solve_ground_state(&g, &q, 0.3, 3.0, 0.5).unwrap();
        let r = gs.bound().unwrap();
        assert!(r.converged);
        let mu = principal_eigenvalue_at(&g, &q, r.kappa_star, &BsNumerics::default()).unwrap();
        assert!((mu - 1.0).abs() <= 1e-8);
        assert!((r.energy + r.kappa_star * r.kappa_star).abs() < 1e-15);
        assert!((r.binding_energy - (r.kappa_star.powi(2) - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn bracket_errors() {
        let (g, q) = single();
        assert!(solve_ground_state(&g, &q, 1.0, 0.5, 0.5).is_err());
        assert!(solve_ground_state(&g, &q, 0.0, 0.5, 0.5).is_err());
        // both ends below the root
        assert!(solve_ground_state(&g, &q, 0.1, 0.2, 0.5).is_err());
        match solve_ground_state(&g, &q, 2.0, 3.0, 0.5).unwrap() {
            GroundState::NoBoundState { mu_lo } => assert!(mu_lo < 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
