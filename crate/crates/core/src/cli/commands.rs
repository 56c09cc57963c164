use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::RunConfig;
use super::output::{fmt_g, Cell, Table};
use crate::bs_solver::{solve_ground_state_with, GroundState};
use crate::checks::{mollifier_sweep, shift_identities, verify_convexity};
use crate::direct_solver::{binding_with_threshold, chain_threshold, ChainThreshold};
use crate::error::{Error, Result};
use crate::floquet::{brillouin_grid, count_gaps, essential_threshold, lowest_band};
use crate::geometry::ArrayGeometry;
use crate::specialfn::{log_convexity_ratio, resolvent_kernel, resolvent_kernel_deriv, KernelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Bs,
    Direct,
    Both,
}

/// Rendered command output and whether a verification failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub file_name: &'static str,
    pub text: String,
    pub verification_failed: bool,
}

impl Output {
    fn table(file_name: &'static str, t: &Table) -> Self {
        Self {
            file_name,
            text: t.render(),
            verification_failed: false,
        }
    }
}

/// `quantity,value` report of the Floquet threshold and the truncated-chain
/// thresholds with both end conditions.
pub fn cmd_threshold(cfg: &RunConfig) -> Result<Output> {
    let th = essential_threshold(&cfg.profile, cfg.spacing, cfg.floquet)?;
    let chain = chain_threshold(&cfg.reference_geometry()?, &cfg.direct)?;
    let mut t = Table::new(&["quantity", "value"]);
    let between = chain.neumann <= th.energy && th.energy <= chain.dirichlet;
    for (name, v) in [
        ("floquet_energy", Cell::from(th.energy)),
        ("kappa0", th.kappa0.into()),
        ("chain_neumann_energy", chain.neumann.into()),
        ("chain_dirichlet_energy", chain.dirichlet.into()),
        ("dn_spread", chain.spread().into()),
        ("floquet_between_ends", between.into()),
    ] {
        t.push(&[name.into(), v]);
    }
    Ok(Output::table("threshold.csv", &t))
}

pub fn cmd_bands(cfg: &RunConfig) -> Result<Output> {
    let thetas = brillouin_grid(cfg.thetas);
    let b = lowest_band(&cfg.profile, cfg.spacing, cfg.floquet, &thetas, cfg.bands)?;
    let mut t = Table::new(&["theta", "band_index", "energy"]);
    for (theta, es) in b.thetas.iter().zip(&b.energies) {
        for (k, e) in es.iter().enumerate() {
            t.push(&[(*theta).into(), k.into(), (*e).into()]);
        }
    }
    if !b.covers_negative_axis() {
        eprintln!("note: the highest computed band lies below 0; raise floquet.bands to resolve every gap");
    }
    eprintln!("gaps below 0: {}", count_gaps(&b));
    Ok(Output::table("bands.csv", &t))
}

struct BindRow {
    method: &'static str,
    kappa_star: f64,
    energy: f64,
    threshold_energy: f64,
    binding: f64,
    dn_spread: f64,
    bound: bool,
    converged: bool,
}

fn bs_binding(cfg: &RunConfig, g: &ArrayGeometry, kappa0: f64) -> Result<BindRow> {
    let q = cfg.quadrature()?;
    let gs = solve_ground_state_with(g, &q, kappa0, cfg.bs.kappa_hi, kappa0, &cfg.bs.numerics)?;
    Ok(match gs {
        GroundState::Bound(r) => BindRow {
            method: "bs",
            kappa_star: r.kappa_star,
            energy: r.energy,
            threshold_energy: r.threshold_energy,
            binding: r.binding_energy,
            dn_spread: f64::NAN,
            bound: r.binding_energy > 0.0,
            converged: r.converged,
        },
        GroundState::NoBoundState { .. } => BindRow {
            method: "bs",
            kappa_star: kappa0,
            energy: -kappa0 * kappa0,
            threshold_energy: -kappa0 * kappa0,
            binding: 0.0,
            dn_spread: f64::NAN,
            bound: false,
            converged: true,
        },
    })
}

fn direct_binding(cfg: &RunConfig, g: &ArrayGeometry, threshold: ChainThreshold) -> Result<BindRow> {
    let d = binding_with_threshold(g, &cfg.direct, threshold)?;
    Ok(BindRow {
        method: "direct",
        kappa_star: d.result.kappa_star,
        energy: d.result.energy,
        threshold_energy: d.result.threshold_energy,
        binding: d.result.binding_energy,
        dn_spread: d.dn_spread,
        bound: d.result.binding_energy > d.dn_spread,
        converged: d.result.converged,
    })
}

/// Bound-state energy of the configured (shifted) array.
pub fn cmd_bind(cfg: &RunConfig, method: Method) -> Result<Output> {
    let g = cfg.geometry()?;
    let mut rows = Vec::new();
    if matches!(method, Method::Bs | Method::Both) {
        let th = essential_threshold(&cfg.profile, cfg.spacing, cfg.floquet)?;
        rows.push(bs_binding(cfg, &g, th.kappa0)?);
    }
    if matches!(method, Method::Direct | Method::Both) {
        let threshold = chain_threshold(&g, &cfg.direct)?;
        rows.push(direct_binding(cfg, &g, threshold)?);
    }
    let mut t = Table::new(&[
        "method",
        "kappa_star",
        "energy",
        "threshold_energy",
        "binding_energy",
        "dn_spread",
        "bound",
        "converged",
    ]);
    for r in &rows {
        t.push(&[
            r.method.into(),
            r.kappa_star.into(),
            r.energy.into(),
            r.threshold_energy.into(),
            r.binding.into(),
            r.dn_spread.into(),
            r.bound.into(),
            r.converged.into(),
        ]);
    }
    if let [a, b] = &rows[..] {
        if a.binding > 0.0 || b.binding > 0.0 {
            eprintln!(
                "relative bs/direct disagreement: {}",
                fmt_g((a.binding - b.binding).abs() / a.binding.max(b.binding))
            );
        }
    }
    Ok(Output::table("bind.csv", &t))
}

pub const MAP_HEADER: &str = "dx,dperp,binding,bound_flag,dn_spread";

fn point_key(dx: f64, dperp: f64) -> (String, String) {
    (fmt_g(dx), fmt_g(dperp))
}

fn read_done(path: &Path) -> Result<(BTreeSet<(String, String)>, Vec<String>)> {
    let mut done = BTreeSet::new();
    let mut rows = Vec::new();
    if !path.exists() {
        return Ok((done, rows));
    }
    let reader = BufReader::new(File::open(path)?);
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if n == 0 {
            if line != MAP_HEADER {
                return Err(Error::Config(format!(
                    "{} exists with an unexpected header; remove it or pick another output directory",
                    path.display()
                )));
            }
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        // a row cut short by an interrupted run is recomputed
        if cells.len() == 5 {
            done.insert((cells[0].to_string(), cells[1].to_string()));
            rows.push(line);
        }
    }
    Ok((done, rows))
}

/// Binding energy over the displacement grid of `map.index`. Rows are
/// appended to `<out>/map.csv` as they finish, points already present are
/// skipped, and the file is rewritten sorted once the grid is complete.
pub fn cmd_map(cfg: &RunConfig, method: Method, out_dir: &Path) -> Result<Output> {
    if method == Method::Both {
        return Err(Error::Config("map takes --method bs or --method direct".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join("map.csv");
    let (done, mut rows) = read_done(&path)?;
    {
        let mut f = File::create(&path)?;
        writeln!(f, "{MAP_HEADER}")?;
        for r in &rows {
            writeln!(f, "{r}")?;
        }
    }
    let base = cfg.geometry()?;
    let points: Vec<(f64, f64)> = cfg
        .map
        .dx
        .values()
        .into_iter()
        .flat_map(|dx| cfg.map.dperp.values().into_iter().map(move |dp| (dx, dp)))
        .filter(|&(dx, dp)| !done.contains(&point_key(dx, dp)))
        .collect();

    let (kappa0, chain) = match method {
        Method::Bs => (essential_threshold(&cfg.profile, cfg.spacing, cfg.floquet)?.kappa0, None),
        _ => (0.0, Some(chain_threshold(&base, &cfg.direct)?)),
    };
    let sink = Mutex::new(OpenOptions::new().append(true).open(&path)?);
    let perp_dim = cfg.profile.nu() as usize - 1;
    points.par_iter().try_for_each(|&(dx, dp)| -> Result<()> {
        let mut dperp = vec![0.0; perp_dim];
        dperp[0] = dp;
        let row = match base.shift_well(cfg.map.index, dx, &dperp) {
            // overlapping supports are outside the admissible region
            Err(Error::Disjointness(_)) => format!("{},{},nan,0,nan", fmt_g(dx), fmt_g(dp)),
            Err(e) => return Err(e),
            Ok(g) => {
                let r = match chain {
                    Some(t) => direct_binding(cfg, &g, t)?,
                    None => bs_binding(cfg, &g, kappa0)?,
                };
                format!(
                    "{},{},{},{},{}",
                    fmt_g(dx),
                    fmt_g(dp),
                    fmt_g(r.binding),
                    i64::from(r.bound),
                    fmt_g(r.dn_spread)
                )
            }
        };
        let mut f = sink.lock().expect("map sink poisoned");
        writeln!(f, "{row}")?;
        f.flush()?;
        Ok(())
    })?;
    drop(sink);

    let (_, fresh) = read_done(&path)?;
    rows = fresh;
    let num = |s: &str| s.parse::<f64>().unwrap_or(f64::NAN);
    rows.sort_by(|a, b| {
        let (pa, pb): (Vec<&str>, Vec<&str>) = (a.split(',').collect(), b.split(',').collect());
        num(pa[0]).total_cmp(&num(pb[0])).then(num(pa[1]).total_cmp(&num(pb[1])))
    });
    let mut text = format!("{MAP_HEADER}\n");
    for r in &rows {
        text.push_str(r);
        text.push('\n');
    }
    std::fs::write(&path, &text)?;
    Ok(Output {
        file_name: "map.csv",
        text,
        verification_failed: false,
    })
}

/// Outcome of one verification suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub suite: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub detail: String,
}

pub fn convexity_suite(seed: u64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut cases = 0;
    let mut worst = f64::INFINITY;
    // the pointwise bound R''/|R'| > (ν-1)/r
    for nu in 2..=5u32 {
        for kappa in [0.3, 1.0, 3.0] {
            let k = KernelParams::new(nu, kappa)?;
            for i in 0..200 {
                let r = 0.01 * (1.05f64).powi(i);
                cases += 1;
                if log_convexity_ratio(&k, r)? <= f64::from(nu - 1) / r {
                    failures += 1;
                }
            }
        }
    }
    // 200 randomized (b, c) with c ≤ b√(ν-1)
    for case in 0..200 {
        let nu = 2 + (case % 4) as u32;
        let kappa = [0.3, 1.0, 3.0][(case / 4) % 3];
        let b: f64 = rng.gen_range(0.5..3.0);
        let c = b * f64::from(nu - 1).sqrt() * rng.gen_range(0.0..=1.0);
        let rep = verify_convexity(nu, kappa, b, c, 20.0, 200)?;
        cases += 1;
        worst = worst.min(rep.min_ratio_margin);
        if !rep.pass {
            failures += 1;
        }
    }
    Ok(SuiteResult {
        suite: "convexity",
        cases,
        failures,
        detail: format!("min ratio margin {}", fmt_g(worst)),
    })
}

pub fn mollifier_suite() -> SuiteResult {
    let r = mollifier_sweep(&[20, 40, 80], 1.0, 0.5, 5.0);
    let scaled: Vec<String> = r.scaled.iter().map(|s| fmt_g(*s)).collect();
    SuiteResult {
        suite: "mollifier",
        cases: r.n_values.len(),
        failures: usize::from(!r.pass),
        detail: format!(
            "n^2 D_n = [{}], spread {}",
            scaled.join(" "),
            fmt_g(r.scaled_spread)
        ),
    }
}

/// Randomized admissible shifts of interior wells of the reference array.
pub fn shift_suite(reference: &ArrayGeometry, seed: u64, cases: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inner = (reference.count() as i64 - 1) / 2 - 1;
    let rho = reference.profile().rho();
    let radius = reference.profile().radius();
    let perp_dim = reference.profile().nu() as usize - 1;
    let mut failures = 0;
    for _ in 0..cases {
        let mut g = reference.clone();
        if inner >= 0 {
            for _ in 0..rng.gen_range(1..=4) {
                let j = rng.gen_range(-inner..=inner);
                let dx = rng.gen_range(-1.0..1.0) * (reference.spacing() / 2.0 - rho);
                let dperp: Vec<f64> = (0..perp_dim).map(|_| rng.gen_range(-radius..radius)).collect();
                if let Ok(next) = g.shift_well(j, dx, &dperp) {
                    g = next;
                }
            }
        }
        if !shift_identities(&g).pass {
            failures += 1;
        }
    }
    SuiteResult {
        suite: "shifts",
        cases,
        failures,
        detail: String::new(),
    }
}

pub fn cmd_verify(cfg: &RunConfig, only: &[String]) -> Result<Output> {
    let suites: Vec<&str> = if only.is_empty() {
        cfg.verify.suites.iter().map(String::as_str).collect()
    } else {
        only.iter().map(String::as_str).collect()
    };
    let mut results = Vec::new();
    for s in suites {
        results.push(match s {
            "convexity" => convexity_suite(cfg.verify.seed)?,
            "mollifier" => mollifier_suite(),
            "shifts" => shift_suite(&cfg.reference_geometry()?, cfg.verify.seed, 100),
            other => return Err(Error::Config(format!("unknown verify suite '{other}'"))),
        });
    }
    let mut t = Table::new(&["suite", "cases", "failures", "status", "detail"]);
    let mut failed = false;
    for r in &results {
        failed |= r.failures > 0;
        t.push(&[
            r.suite.into(),
            r.cases.into(),
            r.failures.into(),
            if r.failures == 0 { "PASS" } else { "FAIL" }.into(),
            r.detail.as_str().into(),
        ]);
    }
    Ok(Output {
        file_name: "verify.csv",
        text: t.render(),
        verification_failed: failed,
    })
}

pub fn cmd_kernel_table(cfg: &RunConfig) -> Result<Output> {
    let kc = &cfg.kernel;
    let k = KernelParams::new(kc.nu, kc.kappa)?;
    let step = (kc.r_max / kc.r_min).ln() / (kc.points - 1) as f64;
    let mut t = Table::new(&["r", "R", "dR", "ratio"]);
    for i in 0..kc.points {
        let r = kc.r_min * (step * i as f64).exp();
        t.push(&[
            r.into(),
            resolvent_kernel(&k, r)?.into(),
            resolvent_kernel_deriv(&k, r)?.into(),
            log_convexity_ratio(&k, r)?.into(),
        ]);
    }
    Ok(Output::table("kernel_table.csv", &t))
}
