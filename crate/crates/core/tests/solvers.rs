//! Cross-checks between the Birman–Schwinger, Floquet and direct solvers on
//! coarse grids.

use wellspec::bs_solver::{
    build_polar_grid, phi0_from_mode, principal_eigenvalue_at, solve_ground_state, trial_functional,
    BsNumerics, GroundState,
};
use wellspec::checks::shift_identities;
use wellspec::direct_solver::{
    assemble_hamiltonian, binding_energy_direct, chain_threshold, ground_energy, lowest_eigenvalues,
    DirectNumerics, EndCondition, GridBox,
};
use wellspec::floquet::{essential_threshold, FdNumerics};
use wellspec::geometry::{build_array, WellProfile};

fn coarse_fd() -> FdNumerics {
    FdNumerics {
        transverse_cutoff: 6.0,
        step: 0.1,
        subsamples: 4,
    }
}

fn coarse_direct() -> DirectNumerics {
    DirectNumerics {
        step: 0.1,
        transverse_cutoff: 6.0,
        ..DirectNumerics::default()
    }
}

fn single_well_direct(step: f64) -> f64 {
    let g = build_array(&WellProfile::reference_gaussian(), 5.0, 1).unwrap();
    let bx = GridBox {
        x_min: -8.0,
        x_max: 8.0,
        transverse_cutoff: 8.0,
    };
    let h = assemble_hamiltonian(&g, &bx, step, EndCondition::Dirichlet, 4).unwrap();
    ground_energy(&h, None).unwrap()
}

#[test]
fn single_well_bs_agrees_with_direct_grid() {
    let p = WellProfile::reference_gaussian();
    let g = build_array(&p, 5.0, 1).unwrap();
    let q = build_polar_grid(&p, 12, 24).unwrap();
    let bs = solve_ground_state(&g, &q, 0.3, 3.0, 0.3).unwrap();
    let e_bs = bs.bound().unwrap().energy;
    // second-order grid: Richardson extrapolation from h and h/2
    let (e1, e2) = (single_well_direct(0.1), single_well_direct(0.05));
    let e_direct = (4.0 * e2 - e1) / 3.0;
    assert!(((e_bs - e_direct) / e_direct).abs() < 1e-4, "{e_bs} vs {e_direct}");
}

#[test]
fn floquet_threshold_sits_between_chain_ends() {
    let p = WellProfile::reference_gaussian();
    let th = essential_threshold(&p, 5.0, coarse_fd()).unwrap();
    let g = build_array(&p, 5.0, 11).unwrap();
    let chain = chain_threshold(&g, &coarse_direct()).unwrap();
    assert!(chain.neumann <= th.energy + 1e-10 && th.energy <= chain.dirichlet);
    assert!(chain.spread() > 0.0);
}

#[test]
fn wide_spacing_threshold_approaches_single_well() {
    let p = WellProfile::reference_gaussian();
    let e_single = single_well_direct(0.1);
    let near = essential_threshold(&p, 5.0, coarse_fd()).unwrap().energy;
    let far = essential_threshold(&p, 12.0, coarse_fd()).unwrap().energy;
    assert!((far - e_single).abs() < (near - e_single).abs());
    assert!((far - e_single).abs() < 1e-3);
}

#[test]
fn unperturbed_chain_has_no_bs_root_below_threshold() {
    let p = WellProfile::reference_gaussian();
    let th = essential_threshold(&p, 5.0, FdNumerics::default()).unwrap();
    let g = build_array(&p, 5.0, 11).unwrap();
    let q = build_polar_grid(&p, 8, 16).unwrap();
    match solve_ground_state(&g, &q, th.kappa0, 3.0, th.kappa0).unwrap() {
        GroundState::NoBoundState { mu_lo } => assert!(mu_lo < 1.0),
        other => panic!("unexpected bound state {other:?}"),
    }
}

#[test]
fn longitudinal_shift_raises_mu_at_threshold() {
    let p = WellProfile::reference_gaussian();
    let th = essential_threshold(&p, 5.0, coarse_fd()).unwrap();
    let g0 = build_array(&p, 5.0, 7).unwrap();
    let g = g0.shift_well(0, 1.0, &[0.0]).unwrap();
    let q = build_polar_grid(&p, 8, 16).unwrap();
    let n = BsNumerics::default();
    let mu0 = principal_eigenvalue_at(&g0, &q, th.kappa0, &n).unwrap();
    let mu = principal_eigenvalue_at(&g, &q, th.kappa0, &n).unwrap();
    assert!(mu > mu0);
    let phi0 = phi0_from_mode(&p, &q, &th.mode).unwrap();
    assert!(phi0.iter().all(|&v| v > 0.0));
    assert!(trial_functional(&g, &g0, &q, &phi0, th.kappa0).unwrap() > 0.0);
}

#[test]
fn direct_binding_of_a_longitudinal_shift() {
    let p = WellProfile::reference_gaussian();
    let g = build_array(&p, 5.0, 11).unwrap().shift_well(0, 1.0, &[0.0]).unwrap();
    assert!(shift_identities(&g).pass);
    let d = binding_energy_direct(&g, &coarse_direct()).unwrap();
    assert!(d.result.binding_energy > 0.01, "{d:?}");
    assert!(!d.inconclusive);
    assert!(d.result.energy < d.result.threshold_energy);
}

#[test]
fn single_well_has_one_negative_level() {
    let g = build_array(&WellProfile::reference_gaussian(), 5.0, 1).unwrap();
    let bx = GridBox {
        x_min: -8.0,
        x_max: 8.0,
        transverse_cutoff: 8.0,
    };
    let h = assemble_hamiltonian(&g, &bx, 0.1, EndCondition::Dirichlet, 4).unwrap();
    let levels = lowest_eigenvalues(&h, 3, None).unwrap();
    assert!(levels[0] < 0.0);
    assert!(levels[1] > 0.0, "{levels:?}");
}
