//! Acceptance suite. Prints one line per criterion and exits nonzero when any
//! criterion fails or overruns its time budget.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use wellspec::bs_solver::{
    build_polar_grid, phi0_from_mode, principal_eigenvalue_curve, solve_ground_state_with, trial_functional,
    BsNumerics,
};
use wellspec::checks::mollifier_sweep;
use wellspec::cli::{cmd_map, convexity_suite, fmt_g, shift_suite, Method, RunConfig};
use wellspec::direct_solver::{
    assemble_hamiltonian, binding_with_threshold, chain_threshold, ground_energy, lowest_eigenvalues, EndCondition,
    GridBox,
};
use wellspec::floquet::{brillouin_grid, count_gaps, essential_threshold, lowest_band};
use wellspec::geometry::{build_array, WellProfile};
use wellspec::specialfn::{resolvent_kernel, resolvent_kernel_deriv, KernelParams};

type Outcome = Result<(bool, String), String>;

fn config(name: &str) -> RunConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    RunConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn kernel_identities() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_deriv = 0.0f64;
    for kappa in [0.5, 1.0, 2.0] {
        let k3 = KernelParams::new(3, kappa).map_err(|e| e.to_string())?;
        for i in 0..=400 {
            let r = 0.05 * 1000f64.powf(f64::from(i) / 400.0);
            let exact = (-kappa * r).exp() / (4.0 * std::f64::consts::PI * r);
            worst = worst.max(rel(resolvent_kernel(&k3, r).map_err(|e| e.to_string())?, exact));
        }
        for nu in 2..=5 {
            let k = KernelParams::new(nu, kappa).map_err(|e| e.to_string())?;
            for i in 0..=40 {
                let r = 0.05 * 1000f64.powf(f64::from(i) / 40.0);
                let h = 1e-4 * r / (1.0 + kappa * r);
                let f = |x: f64| resolvent_kernel(&k, x).map_err(|e| e.to_string());
                let fd = (f(r + h)? - f(r - h)?) / (2.0 * h);
                let d = resolvent_kernel_deriv(&k, r).map_err(|e| e.to_string())?;
                worst_deriv = worst_deriv.max(rel(d, fd));
            }
        }
    }
    Ok((
        worst <= 1e-12 && worst_deriv <= 1e-6,
        format!("max rel error {}, derivative vs finite difference {}", fmt_g(worst), fmt_g(worst_deriv)),
    ))
}

fn convexity() -> Outcome {
    let r = convexity_suite(config("reference.conf").verify.seed).map_err(|e| e.to_string())?;
    Ok((r.failures == 0, format!("{} cases, {} failures, {}", r.cases, r.failures, r.detail)))
}

fn bs_monotonicity() -> Outcome {
    let p = WellProfile::reference_gaussian();
    let g = build_array(&p, 5.0, 1).map_err(|e| e.to_string())?;
    let q = build_polar_grid(&p, 12, 24).map_err(|e| e.to_string())?;
    let mut kappas: Vec<f64> = (0..12).map(|i| 0.3 + 2.7 * f64::from(i) / 11.0).collect();
    kappas.extend([0.5, 10.0]);
    let mu = principal_eigenvalue_curve(&g, &q, &kappas, &BsNumerics::default()).map_err(|e| e.to_string())?;
    let decreasing = mu[..12].windows(2).all(|w| w[1] < w[0]);
    let ratio = mu[13] / mu[12];
    Ok((
        decreasing && ratio < 0.05,
        format!(
            "strictly decreasing {decreasing}, mu(0.3) {}, mu(3) {}, mu(10)/mu(0.5) {}",
            fmt_g(mu[0]),
            fmt_g(mu[11]),
            fmt_g(ratio)
        ),
    ))
}

fn single_well_direct(step: f64) -> wellspec::Result<f64> {
    let g = build_array(&WellProfile::reference_gaussian(), 5.0, 1)?;
    let bx = GridBox {
        x_min: -8.0,
        x_max: 8.0,
        transverse_cutoff: 8.0,
    };
    let h = assemble_hamiltonian(&g, &bx, step, EndCondition::Dirichlet, 4)?;
    ground_energy(&h, None)
}

fn oracle_equivalence() -> Outcome {
    let p = WellProfile::reference_gaussian();
    let g = build_array(&p, 5.0, 1).map_err(|e| e.to_string())?;
    let mut bs = Vec::new();
    for (nr, na) in [(12, 24), (24, 48)] {
        let q = build_polar_grid(&p, nr, na).map_err(|e| e.to_string())?;
        let gs = solve_ground_state_with(&g, &q, 0.3, 3.0, 0.3, &BsNumerics::default()).map_err(|e| e.to_string())?;
        bs.push(gs.bound().ok_or("no BS bound state for the single well")?.energy);
    }
    let e1 = single_well_direct(0.1).map_err(|e| e.to_string())?;
    let e2 = single_well_direct(0.05).map_err(|e| e.to_string())?;
    let direct = (4.0 * e2 - e1) / 3.0;
    let d = rel(bs[1], direct);
    Ok((
        d <= 1e-3,
        format!(
            "BS 12x24 {}, 24x48 {}; direct h=0.1 {}, h=0.05 {}, extrapolated {}; rel {}",
            fmt_g(bs[0]),
            fmt_g(bs[1]),
            fmt_g(e1),
            fmt_g(e2),
            fmt_g(direct),
            fmt_g(d)
        ),
    ))
}

fn threshold_consistency() -> Outcome {
    let cfg = config("reference.conf");
    let th = essential_threshold(&cfg.profile, cfg.spacing, cfg.floquet).map_err(|e| e.to_string())?;
    let chain = chain_threshold(&cfg.reference_geometry().map_err(|e| e.to_string())?, &cfg.direct)
        .map_err(|e| e.to_string())?;
    let between = chain.neumann <= th.energy && th.energy <= chain.dirichlet;
    Ok((
        between && chain.spread() <= 1e-3,
        format!(
            "N {} <= Floquet {} <= D {}: {between}; spread {} (limit 1e-3)",
            fmt_g(chain.neumann),
            fmt_g(th.energy),
            fmt_g(chain.dirichlet),
            fmt_g(chain.spread())
        ),
    ))
}

fn existence() -> Outcome {
    let cfg = config("bind_dx1.conf");
    let th = essential_threshold(&cfg.profile, cfg.spacing, cfg.floquet).map_err(|e| e.to_string())?;
    let reference = cfg.reference_geometry().map_err(|e| e.to_string())?;
    let chain = chain_threshold(&reference, &cfg.direct).map_err(|e| e.to_string())?;
    let q = cfg.quadrature().map_err(|e| e.to_string())?;
    let g = reference.shift_well(0, 1.0, &[0.0]).map_err(|e| e.to_string())?;
    let bs = solve_ground_state_with(&g, &q, th.kappa0, cfg.bs.kappa_hi, th.kappa0, &cfg.bs.numerics)
        .map_err(|e| e.to_string())?
        .binding_energy();
    let direct = binding_with_threshold(&g, &cfg.direct, chain)
        .map_err(|e| e.to_string())?
        .result
        .binding_energy;
    let phi0 = phi0_from_mode(&cfg.profile, &q, &th.mode).map_err(|e| e.to_string())?;
    let trial = trial_functional(&g, &reference, &q, &phi0, th.kappa0).map_err(|e| e.to_string())?;
    Ok((
        bs > 0.0 && direct > 0.0 && rel(bs, direct) <= 0.05 && trial > 0.0,
        format!(
            "binding bs {} direct {} rel {}; trial at kappa0 {}",
            fmt_g(bs),
            fmt_g(direct),
            fmt_g(rel(bs, direct)),
            fmt_g(trial)
        ),
    ))
}

fn null_transversal() -> Outcome {
    let cfg = config("null_transversal.conf");
    let g = cfg.geometry().map_err(|e| e.to_string())?;
    let chain = chain_threshold(&g, &cfg.direct).map_err(|e| e.to_string())?;
    let d = binding_with_threshold(&g, &cfg.direct, chain).map_err(|e| e.to_string())?;
    Ok((
        d.result.binding_energy <= d.dn_spread,
        format!("binding {} vs D/N spread {}", fmt_g(d.result.binding_energy), fmt_g(d.dn_spread)),
    ))
}

fn small_shift_continuity() -> Outcome {
    let cfg = config("reference.conf");
    let reference = cfg.reference_geometry().map_err(|e| e.to_string())?;
    let chain = chain_threshold(&reference, &cfg.direct).map_err(|e| e.to_string())?;
    let mut b = Vec::new();
    for dx in [0.05, 0.2, 1.0] {
        let g = reference.shift_well(0, dx, &[0.0]).map_err(|e| e.to_string())?;
        b.push(binding_with_threshold(&g, &cfg.direct, chain).map_err(|e| e.to_string())?.result.binding_energy);
    }
    let ordered = b[0] < b[1] && b[1] < b[2];

    let map_cfg = config("map.conf");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().map_err(|e| e.to_string())?;
    let start = Instant::now();
    pool.install(|| cmd_map(&map_cfg, Method::Direct, dir.path())).map_err(|e| e.to_string())?;
    let map_time = start.elapsed();
    let text = std::fs::read_to_string(dir.path().join("map.csv")).map_err(|e| e.to_string())?;
    let rows: Vec<[f64; 3]> = text
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<f64> = l.split(',').map(|s| s.parse().unwrap_or(f64::NAN)).collect();
            [c[0], c[1], c[2]]
        })
        .collect();
    let mut dperps: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    dperps.sort_by(f64::total_cmp);
    dperps.dedup();
    // smallest longitudinal shift that binds, per transversal column
    let boundary: Vec<Option<f64>> = dperps
        .iter()
        .map(|&dp| {
            rows.iter()
                .filter(|r| r[1] == dp && r[2] > 0.0)
                .map(|r| r[0])
                .min_by(f64::total_cmp)
        })
        .collect();
    let complete = rows.len() == map_cfg.map.dx.count * map_cfg.map.dperp.count && boundary.iter().all(Option::is_some);
    let edge: Vec<f64> = boundary.iter().map(|b| b.unwrap_or(f64::NAN)).collect();
    let monotone = complete && edge.windows(2).all(|w| w[1] >= w[0]);
    let vanishes = rows.iter().filter(|r| r[0] == 0.0).all(|r| r[2] == 0.0);
    let in_budget = map_time < Duration::from_secs(600);
    Ok((
        ordered && monotone && vanishes && in_budget,
        format!(
            "binding(0.05) {} < binding(0.2) {} < binding(1.0) {}: {ordered}; map {}x{} in {:.0} s, zero at dx=0 {vanishes}, boundary [{}] monotone {monotone}",
            fmt_g(b[0]),
            fmt_g(b[1]),
            fmt_g(b[2]),
            map_cfg.map.dx.count,
            map_cfg.map.dperp.count,
            map_time.as_secs_f64(),
            edge.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")
        ),
    ))
}

fn mollifier_decay() -> Outcome {
    let r = mollifier_sweep(&[20, 40, 80], 1.0, 0.5, 5.0);
    let all_negative = r.defects.iter().all(|&d| d < 0.0);
    Ok((
        all_negative && r.scaled_spread <= 0.15,
        format!(
            "D_n < 0 {all_negative}; n^2 D_n [{}], spread {} (limit 0.15)",
            r.scaled.iter().map(|s| fmt_g(*s)).collect::<Vec<_>>().join(" "),
            fmt_g(r.scaled_spread)
        ),
    ))
}

fn shift_identities() -> Outcome {
    let cfg = config("reference.conf");
    let r = shift_suite(&cfg.reference_geometry().map_err(|e| e.to_string())?, cfg.verify.seed, 100);
    Ok((r.failures == 0, format!("{} geometries, {} failures", r.cases, r.failures)))
}

fn gap_bound() -> Outcome {
    let cfg = config("gap_a12.conf");
    let bands = lowest_band(&cfg.profile, cfg.spacing, cfg.floquet, &brillouin_grid(cfg.thetas), cfg.bands)
        .map_err(|e| e.to_string())?;
    let gaps = count_gaps(&bands);
    let g = build_array(&cfg.profile, cfg.spacing, 1).map_err(|e| e.to_string())?;
    let bx = GridBox {
        x_min: -8.0,
        x_max: 8.0,
        transverse_cutoff: cfg.direct.transverse_cutoff,
    };
    let h = assemble_hamiltonian(&g, &bx, cfg.direct.step, EndCondition::Dirichlet, cfg.direct.subsamples)
        .map_err(|e| e.to_string())?;
    let levels = lowest_eigenvalues(&h, 4, None).map_err(|e| e.to_string())?;
    let negative = levels.iter().filter(|&&e| e < 0.0).count();
    let resolved = bands.covers_negative_axis() && negative < levels.len();
    Ok((
        resolved && gaps <= negative,
        format!("{gaps} gaps below 0 for a=12, single well has {negative} negative levels, all resolved {resolved}"),
    ))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 11] = [
        ("kernel identities", 1, kernel_identities),
        ("convexity suite", 10, convexity),
        ("BS monotonicity", 30, bs_monotonicity),
        ("oracle equivalence", 120, oracle_equivalence),
        ("threshold consistency", 180, threshold_consistency),
        ("existence under longitudinal shift", 300, existence),
        ("transversal null test", 180, null_transversal),
        ("small-shift continuity", 600, small_shift_continuity),
        ("mollifier decay", 5, mollifier_decay),
        ("shift identities", 1, shift_identities),
        ("gap bound", 180, gap_bound),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs < *budget as f64;
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name} ({detail}; {secs:.2} s of {budget} s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
