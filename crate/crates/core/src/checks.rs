//! Numerical verification of the analytic ingredients behind the existence
//! argument: convexity of the displaced kernel, the mollifier energy defect
//! and the shift-sum identities.

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::specialfn::{log_convexity_ratio, resolvent_kernel, KernelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub nu: u32,
    pub kappa: f64,
    pub b: f64,
    pub c: f64,
    pub samples: Vec<f64>,
    /// Smallest central second difference of `g(x) = R_κ(z(x))`, relative to `g(x)`.
    pub min_second_difference: f64,
    /// Smallest `R''/|R'| (z) - z''/z'²` over the samples; positive exactly
    /// when `g'' > 0`.
    pub min_ratio_margin: f64,
    pub pass: bool,
}

/// Samples `g(x) = R_κ(√((b+x)² + c²))` on a log-spaced grid in
/// `[x_max·10⁻⁶, x_max]` and checks strict convexity.
pub fn verify_convexity(
    nu: u32,
    kappa: f64,
    b: f64,
    c: f64,
    x_max: f64,
    n_samples: usize,
) -> Result<ConvexityReport> {
    if !(b > 0.0) || !(c >= 0.0) || !(x_max > 0.0) || n_samples < 3 {
        return Err(Error::Domain(format!(
            "convexity check needs b > 0, c >= 0, x_max > 0 and 3 samples (b={b}, c={c}, x_max={x_max}, n={n_samples})"
        )));
    }
    let k = KernelParams::new(nu, kappa)?;
    let lo = x_max * 1e-6;
    let step = (x_max / lo).ln() / (n_samples - 1) as f64;
    let samples: Vec<f64> = (0..n_samples).map(|i| lo * (step * i as f64).exp()).collect();
    let z = |x: f64| ((b + x).powi(2) + c * c).sqrt();
    let g: Vec<f64> = samples
        .iter()
        .map(|&x| resolvent_kernel(&k, z(x)))
        .collect::<Result<_>>()?;

    let mut min_second_difference = f64::INFINITY;
    for i in 1..n_samples - 1 {
        let (h1, h2) = (samples[i] - samples[i - 1], samples[i + 1] - samples[i]);
        let d2 = 2.0 * ((g[i + 1] - g[i]) / h2 - (g[i] - g[i - 1]) / h1) / (h1 + h2);
        min_second_difference = min_second_difference.min(d2 / g[i]);
    }
    let mut min_ratio_margin = f64::INFINITY;
    for &x in &samples {
        let zx = z(x);
        let curvature = c * c / (zx * (b + x).powi(2));
        min_ratio_margin = min_ratio_margin.min(log_convexity_ratio(&k, zx)? - curvature);
    }
    Ok(ConvexityReport {
        nu,
        kappa,
        b,
        c,
        samples,
        min_second_difference,
        min_ratio_margin,
        pass: min_second_difference > 0.0,
    })
}

/// `h_{n,i} = n² / (n² + i²)`.
pub fn mollifier_weight(n: u32, i: i64) -> f64 {
    let n2 = f64::from(n) * f64::from(n);
    n2 / (n2 + (i * i) as f64)
}

/// `D = Σ_{|i|,|j|≤M} h_{n,i} (h_{n,j} - h_{n,i}) c e^{-κa|i-j|}`.
pub fn mollifier_defect(n: u32, m: u32, c: f64, kappa: f64, a: f64) -> f64 {
    let m = i64::from(m);
    let h: Vec<f64> = (-m..=m).map(|i| mollifier_weight(n, i)).collect();
    let decay: Vec<f64> = (0..h.len()).map(|d| c * (-kappa * a * d as f64).exp()).collect();
    let mut total = 0.0;
    for (ii, hi) in h.iter().enumerate() {
        let mut row = 0.0;
        for (jj, hj) in h.iter().enumerate() {
            row += (hj - hi) * decay[ii.abs_diff(jj)];
        }
        total += hi * row;
    }
    total
}

/// The same sum after antisymmetrization: `-½ Σ (h_{n,i} - h_{n,j})² M_ij`.
pub fn mollifier_defect_symmetric(n: u32, m: u32, c: f64, kappa: f64, a: f64) -> f64 {
    let m = i64::from(m);
    let h: Vec<f64> = (-m..=m).map(|i| mollifier_weight(n, i)).collect();
    let mut total = 0.0;
    for (ii, hi) in h.iter().enumerate() {
        for (jj, hj) in h.iter().enumerate() {
            total += (hi - hj).powi(2) * c * (-kappa * a * ii.abs_diff(jj) as f64).exp();
        }
    }
    -0.5 * total
}

#[derive(Debug, Clone, PartialEq)]
pub struct MollifierReport {
    pub n_values: Vec<u32>,
    pub truncation: Vec<u32>,
    pub c: f64,
    pub kappa: f64,
    pub a: f64,
    pub defects: Vec<f64>,
    /// `n² D_n`.
    pub scaled: Vec<f64>,
    /// All `D_n < 0`.
    pub negative: bool,
    /// `(max - min) / max` of `n² |D_n|`.
    pub scaled_spread: f64,
    /// `negative` and `scaled_spread ≤ 0.15`.
    pub pass: bool,
}

pub const MOLLIFIER_SPREAD_TOLERANCE: f64 = 0.15;

/// Defect sweep with truncation `M = 50 n`.
pub fn mollifier_sweep(n_values: &[u32], c: f64, kappa: f64, a: f64) -> MollifierReport {
    let truncation: Vec<u32> = n_values.iter().map(|&n| 50 * n).collect();
    let defects: Vec<f64> = n_values
        .iter()
        .zip(&truncation)
        .map(|(&n, &m)| mollifier_defect(n, m, c, kappa, a))
        .collect();
    let scaled: Vec<f64> = n_values
        .iter()
        .zip(&defects)
        .map(|(&n, d)| f64::from(n).powi(2) * d)
        .collect();
    let abs: Vec<f64> = scaled.iter().map(|s| s.abs()).collect();
    let hi = abs.iter().copied().fold(0.0, f64::max);
    let lo = abs.iter().copied().fold(f64::INFINITY, f64::min);
    let scaled_spread = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
    let negative = defects.iter().all(|&d| d < 0.0);
    MollifierReport {
        n_values: n_values.to_vec(),
        truncation,
        c,
        kappa,
        a,
        defects,
        scaled,
        negative,
        scaled_spread,
        pass: negative && scaled_spread <= MOLLIFIER_SPREAD_TOLERANCE,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftReport {
    pub delta_sum: f64,
    /// `max |η_ij + η_ji|`.
    pub eta_antisymmetry: f64,
    /// `max ||η_ij| - |Σ_{r=min}^{max-1} δ_r||`.
    pub eta_mismatch: f64,
    /// Largest `|δ_j|` with both wells `j, j+1` outside the perturbation window.
    pub outside_window: f64,
    pub pass: bool,
}

const SHIFT_TOLERANCE: f64 = 1e-12;

pub fn shift_identities(g: &ArrayGeometry) -> ShiftReport {
    let s = g.relative_shifts();
    let idx: Vec<i64> = g.indices().collect();
    let delta_sum = s.delta_sum();
    let mut eta_antisymmetry: f64 = 0.0;
    let mut eta_mismatch: f64 = 0.0;
    for &i in &idx {
        for &j in &idx {
            eta_antisymmetry = eta_antisymmetry.max((s.eta(i, j) + s.eta(j, i)).abs());
            let partial: f64 = (i.min(j)..i.max(j)).map(|r| s.delta(r)).sum();
            eta_mismatch = eta_mismatch.max((s.eta(i, j).abs() - partial.abs()).abs());
        }
    }
    let window = g.perturbation_window();
    let outside_window = s
        .deltas()
        .iter()
        .filter(|(j, _)| j.abs() > window && (j + 1).abs() > window)
        .map(|(_, d)| d.abs())
        .fold(0.0, f64::max);
    let scale = g.spacing().max(1.0);
    ShiftReport {
        delta_sum,
        eta_antisymmetry,
        eta_mismatch,
        outside_window,
        pass: delta_sum.abs() <= SHIFT_TOLERANCE * scale
            && eta_antisymmetry <= SHIFT_TOLERANCE * scale
            && eta_mismatch <= SHIFT_TOLERANCE * scale
            && outside_window == 0.0,
    }
}
