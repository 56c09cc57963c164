use rayon::prelude::*;

use super::grid::QuadratureGrid;
use crate::error::{Error, Result};
use crate::floquet::ThresholdMode;
use crate::geometry::{ArrayGeometry, WellProfile};
use crate::specialfn::KernelParams;

/// `φ₀ = √V ψ₀` at the nodes of one well.
pub fn phi0_from_mode(profile: &WellProfile, q: &QuadratureGrid, mode: &ThresholdMode) -> Result<Vec<f64>> {
    if q.nu() != 2 || profile.nu() != 2 {
        return Err(Error::Domain("threshold modes are planar".into()));
    }
    Ok(q.nodes()
        .iter()
        .zip(mode.sample(q.nodes()))
        .map(|(x, psi)| profile.potential(x).sqrt() * psi)
        .collect())
}

fn pair_form(q: &QuadratureGrid, x: &[f64], kernel: &KernelParams, shift: &[f64]) -> f64 {
    let nodes = q.nodes();
    let mut acc = 0.0;
    for (p, a) in nodes.iter().enumerate() {
        if x[p] == 0.0 {
            continue;
        }
        let row: f64 = nodes
            .iter()
            .enumerate()
            .filter(|&(s, _)| x[s] != 0.0)
            .map(|(s, b)| {
                let r2: f64 = a
                    .iter()
                    .zip(b)
                    .zip(shift)
                    .map(|((u, v), d)| (u - v + d).powi(2))
                    .sum();
                kernel.kernel_unchecked(r2.sqrt()) * x[s]
            })
            .sum();
        acc += x[p] * row;
    }
    acc
}

/// `Σ_{i,j} (φ₀, [K^{(i,j)}_Y(-κ²) - K^{(i,j)}_{Y₀}(-κ²)] φ₀)` over the
/// window, with `φ₀` replicated in every well. Pairs whose relative
/// position is unchanged contribute nothing and are skipped.
pub fn trial_functional(
    g_y: &ArrayGeometry,
    g_y0: &ArrayGeometry,
    q: &QuadratureGrid,
    phi0: &[f64],
    kappa: f64,
) -> Result<f64> {
    if g_y.profile() != g_y0.profile()
        || g_y.spacing() != g_y0.spacing()
        || g_y.indices() != g_y0.indices()
    {
        return Err(Error::Domain("geometries differ in profile, spacing or window".into()));
    }
    if q.nu() != g_y.profile().nu() || phi0.len() != q.len() {
        return Err(Error::Domain(format!(
            "phi0 has {} samples for a grid of {} nodes",
            phi0.len(),
            q.len()
        )));
    }
    if phi0.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Domain("phi0 samples must be finite and nonnegative".into()));
    }
    let kernel = KernelParams::new(q.nu(), kappa)?;
    // (φ, V^{1/2} R V^{1/2} φ) ≈ Σ_{p,s} x_p R_ps x_s with x_p = w_p V_p^{1/2} φ_p
    let profile = g_y.profile();
    let x: Vec<f64> = phi0
        .iter()
        .zip(q.weights())
        .zip(q.nodes())
        .map(|((f, w), xi)| f * w * profile.potential(xi).sqrt())
        .collect();
    let idx: Vec<i64> = g_y.indices().collect();
    let diff = |g: &ArrayGeometry, i: i64, j: i64| -> Vec<f64> {
        g.center(i).iter().zip(g.center(j)).map(|(a, b)| a - b).collect()
    };
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = idx
        .iter()
        .enumerate()
        .flat_map(|(a, &i)| idx[a + 1..].iter().map(move |&j| (i, j)))
        .map(|(i, j)| (diff(g_y, i, j), diff(g_y0, i, j)))
        .filter(|(d, d0)| d != d0)
        .collect();
    let half: f64 = pairs
        .par_iter()
        .map(|(d, d0)| pair_form(q, &x, &kernel, d) - pair_form(q, &x, &kernel, d0))
        .sum();
    Ok(2.0 * half)
}
