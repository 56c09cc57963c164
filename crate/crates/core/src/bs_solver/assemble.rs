use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::grid::{gauss_legendre, GridKind, QuadratureGrid};
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, WellProfile};
use crate::specialfn::KernelParams;

/// Treatment of the weakly singular diagonal of a self-interaction block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfTerm {
    /// Nyström with singularity subtraction: the diagonal entry is
    /// `∫ R(|ξ_p - ξ'|) V(ξ') dξ' - Σ_{q≠p} w_q V_q R_pq`, the integral taken
    /// by ray quadrature around the node. Needs ν = 2, or ν = 3 with a
    /// radial profile.
    Subtraction,
    /// The kernel averaged over a ball of the node's cell volume.
    BallAverage,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsNumerics {
    pub self_term: SelfTerm,
    /// Angular samples of the ray quadrature (half circle for radial wells).
    pub ray_angles: usize,
    /// Gauss–Legendre nodes along each ray.
    pub ray_nodes: usize,
}

impl Default for BsNumerics {
    fn default() -> Self {
        Self {
            self_term: SelfTerm::Subtraction,
            ray_angles: 256,
            ray_nodes: 48,
        }
    }
}

impl BsNumerics {
    fn effective_self_term(&self, p: &WellProfile) -> SelfTerm {
        match (self.self_term, p.nu(), p.is_radial()) {
            (SelfTerm::Subtraction, 2, _) | (SelfTerm::Subtraction, 3, true) => SelfTerm::Subtraction,
            _ => SelfTerm::BallAverage,
        }
    }
}

fn unit_ball_volume(nu: u32) -> f64 {
    // ω_ν = π^{ν/2} / Γ(ν/2 + 1), by ω_ν = 2π/ν · ω_{ν-2}
    let mut w = if nu % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if nu % 2 == 0 { 0 } else { 1 };
    while k < nu {
        k += 2;
        w *= 2.0 * std::f64::consts::PI / f64::from(k);
    }
    w
}

/// `√(w_p V_p)` for every node.
fn root_weights(profile: &WellProfile, q: &QuadratureGrid) -> Vec<f64> {
    q.nodes()
        .iter()
        .zip(q.weights())
        .map(|(x, w)| (w * profile.potential(x)).sqrt())
        .collect()
}

fn distance(a: &[f64], b: &[f64], shift: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(shift)
        .map(|((x, y), d)| {
            let t = x - y + d;
            t * t
        })
        .sum::<f64>()
        .sqrt()
}

/// `J(ξ) = ∫ R(|ξ - ξ'|) V(ξ') dξ'` over the support, by rays from `ξ`.
fn potential_integral(
    profile: &WellProfile,
    kernel: &KernelParams,
    xi: &[f64],
    numerics: &BsNumerics,
) -> Result<f64> {
    let t_rule = gauss_legendre(numerics.ray_nodes, 0.0, 1.0)?;
    let nu = profile.nu();
    let along_ray = |dir: &[f64]| -> f64 {
        let s_max = profile.support_exit(xi, dir);
        if s_max <= 0.0 {
            return 0.0;
        }
        // s = s_max t² clusters nodes at the singular end
        let mut point = vec![0.0; xi.len()];
        t_rule
            .iter()
            .map(|&(t, w)| {
                let s = s_max * t * t;
                for ((p, x), d) in point.iter_mut().zip(xi).zip(dir) {
                    *p = x + s * d;
                }
                let jac = s.powi(nu as i32 - 1) * 2.0 * s_max * t;
                w * kernel.kernel_unchecked(s) * profile.potential(&point) * jac
            })
            .sum()
    };
    let tau = 2.0 * std::f64::consts::PI;
    match nu {
        2 => {
            let n = numerics.ray_angles;
            let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            if profile.is_radial() && r > 0.0 {
                // rays at angle α from the outward radial direction; even in α
                let (er, et) = ([xi[0] / r, xi[1] / r], [-xi[1] / r, xi[0] / r]);
                let da = std::f64::consts::PI / n as f64;
                Ok(2.0
                    * da
                    * (0..n)
                        .map(|k| {
                            let a = (k as f64 + 0.5) * da;
                            let (c, s) = (a.cos(), a.sin());
                            along_ray(&[c * er[0] + s * et[0], c * er[1] + s * et[1]])
                        })
                        .sum::<f64>())
            } else {
                let da = tau / (2 * n) as f64;
                Ok(da
                    * (0..2 * n)
                        .map(|k| {
                            let a = (k as f64 + 0.5) * da;
                            along_ray(&[a.cos(), a.sin()])
                        })
                        .sum::<f64>())
            }
        }
        3 => {
            // axis along ξ; the integrand is independent of the azimuth
            let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            let axis = if r > 0.0 {
                [xi[0] / r, xi[1] / r, xi[2] / r]
            } else {
                [1.0, 0.0, 0.0]
            };
            // any unit vector orthogonal to the axis
            let helper = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let dotp = helper[0] * axis[0] + helper[1] * axis[1] + helper[2] * axis[2];
            let mut perp = [
                helper[0] - dotp * axis[0],
                helper[1] - dotp * axis[1],
                helper[2] - dotp * axis[2],
            ];
            let np = (perp[0] * perp[0] + perp[1] * perp[1] + perp[2] * perp[2]).sqrt();
            perp.iter_mut().for_each(|v| *v /= np);
            let polar = gauss_legendre(numerics.ray_angles, -1.0, 1.0)?;
            Ok(tau
                * polar
                    .iter()
                    .map(|&(c, w)| {
                        let s = (1.0 - c * c).sqrt();
                        let dir = [
                            c * axis[0] + s * perp[0],
                            c * axis[1] + s * perp[1],
                            c * axis[2] + s * perp[2],
                        ];
                        w * along_ray(&dir)
                    })
                    .sum::<f64>())
        }
        nu => Err(Error::Domain(format!("ray quadrature supports ν = 2, 3, got {nu}"))),
    }
}

/// Diagonal entries of a self-interaction block.
fn self_diagonal(
    profile: &WellProfile,
    q: &QuadratureGrid,
    kernel: &KernelParams,
    numerics: &BsNumerics,
) -> Result<Vec<f64>> {
    let nodes = q.nodes();
    let weights = q.weights();
    let vals: Vec<f64> = nodes.iter().map(|x| profile.potential(x)).collect();
    match numerics.effective_self_term(profile) {
        SelfTerm::BallAverage => {
            let omega = unit_ball_volume(profile.nu());
            nodes
                .iter()
                .zip(weights)
                .zip(&vals)
                .map(|((_, &w), &v)| {
                    let eps = (w / omega).powf(1.0 / f64::from(profile.nu()));
                    Ok(v * kernel.ball_integral(eps)?)
                })
                .collect()
        }
        SelfTerm::Subtraction => {
            // on polar grids of radial wells J depends on the radius only
            let mut cache: HashMap<usize, f64> = HashMap::new();
            let mut out = Vec::with_capacity(q.len());
            for (p, x) in nodes.iter().enumerate() {
                if vals[p] == 0.0 {
                    out.push(0.0);
                    continue;
                }
                let j = match (profile.is_radial(), q.radial_index(p)) {
                    (true, Some(ri)) => match cache.get(&ri) {
                        Some(&v) => v,
                        None => {
                            let v = potential_integral(profile, kernel, x, numerics)?;
                            cache.insert(ri, v);
                            v
                        }
                    },
                    _ => potential_integral(profile, kernel, x, numerics)?,
                };
                let off: f64 = (0..q.len())
                    .filter(|&s| s != p)
                    .map(|s| weights[s] * vals[s] * kernel.kernel_unchecked(distance(x, &nodes[s], &[0.0; 3])))
                    .sum();
                out.push(j - off);
            }
            Ok(out)
        }
    }
}

/// Block for two wells whose centres differ by `shift = y_i - y_j`.
fn pair_block(q: &QuadratureGrid, root_w: &[f64], kernel: &KernelParams, shift: &[f64]) -> DMatrix<f64> {
    let nodes = q.nodes();
    let n = q.len();
    DMatrix::from_fn(n, n, |p, s| {
        if root_w[p] == 0.0 || root_w[s] == 0.0 {
            0.0
        } else {
            (root_w[p] * root_w[s]) * kernel.kernel_unchecked(distance(&nodes[p], &nodes[s], shift))
        }
    })
}

fn self_block(
    profile: &WellProfile,
    q: &QuadratureGrid,
    root_w: &[f64],
    kernel: &KernelParams,
    numerics: &BsNumerics,
) -> Result<DMatrix<f64>> {
    let nodes = q.nodes();
    let n = q.len();
    let diag = self_diagonal(profile, q, kernel, numerics)?;
    let zero = vec![0.0; q.nu() as usize];
    Ok(DMatrix::from_fn(n, n, |p, s| {
        if p == s {
            diag[p]
        } else if root_w[p] == 0.0 || root_w[s] == 0.0 {
            0.0
        } else {
            (root_w[p] * root_w[s]) * kernel.kernel_unchecked(distance(&nodes[p], &nodes[s], &zero))
        }
    }))
}

fn check_grid(g: &ArrayGeometry, q: &QuadratureGrid) -> Result<()> {
    if q.nu() != g.profile().nu() {
        return Err(Error::Domain(format!(
            "grid dimension {} does not match the geometry dimension {}",
            q.nu(),
            g.profile().nu()
        )));
    }
    if q.kind() == GridKind::Polar && !g.profile().is_radial() {
        return Err(Error::Domain("polar grid used with a non-radial profile".into()));
    }
    Ok(())
}

fn displacement(g: &ArrayGeometry, i: i64, j: i64) -> Vec<f64> {
    g.center(i).iter().zip(g.center(j)).map(|(a, b)| a - b).collect()
}

fn check_index(g: &ArrayGeometry, i: i64) -> Result<()> {
    if g.indices().contains(&i) {
        Ok(())
    } else {
        Err(Error::Domain(format!("well index {i} outside the array")))
    }
}

/// Block `(i, j)` of the discretized `K(-κ²)`: entries
/// `√(w_p V_p) R_κ(|ξ_p + y_i - ξ_q - y_j|) √(w_q V_q)`, with the self-term
/// rule on the diagonal when `i = j`.
pub fn assemble_block(
    g: &ArrayGeometry,
    q: &QuadratureGrid,
    i: i64,
    j: i64,
    kappa: f64,
) -> Result<DMatrix<f64>> {
    assemble_block_with(g, q, i, j, kappa, &BsNumerics::default())
}

pub fn assemble_block_with(
    g: &ArrayGeometry,
    q: &QuadratureGrid,
    i: i64,
    j: i64,
    kappa: f64,
    numerics: &BsNumerics,
) -> Result<DMatrix<f64>> {
    check_grid(g, q)?;
    check_index(g, i)?;
    check_index(g, j)?;
    let kernel = KernelParams::new(g.profile().nu(), kappa)?;
    let root_w = root_weights(g.profile(), q);
    if i == j {
        self_block(g.profile(), q, &root_w, &kernel, numerics)
    } else {
        Ok(pair_block(q, &root_w, &kernel, &displacement(g, i, j)))
    }
}

/// Dense symmetric matrix of `K(-κ²)` over all wells of a finite array.
#[derive(Debug, Clone)]
pub struct BSBlockOperator {
    kappa: f64,
    first_index: i64,
    count: usize,
    block_size: usize,
    matrix: DMatrix<f64>,
}

impl BSBlockOperator {
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn block(&self, i: i64, j: i64) -> DMatrix<f64> {
        let (bi, bj) = (
            (i - self.first_index) as usize * self.block_size,
            (j - self.first_index) as usize * self.block_size,
        );
        self.matrix
            .view((bi, bj), (self.block_size, self.block_size))
            .into_owned()
    }

    /// Operator with a single node and a prescribed entry (used for scalar checks).
    pub fn from_matrix(kappa: f64, matrix: DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        Self {
            kappa,
            first_index: 0,
            count: 1,
            block_size: n,
            matrix,
        }
    }
}

/// Assembles every block. Blocks depend only on the centre displacement, so
/// each distinct displacement is computed once; `K^{(j,i)} = (K^{(i,j)})ᵀ`.
pub fn assemble_operator(
    g: &ArrayGeometry,
    q: &QuadratureGrid,
    kappa: f64,
    numerics: &BsNumerics,
) -> Result<BSBlockOperator> {
    check_grid(g, q)?;
    let kernel = KernelParams::new(g.profile().nu(), kappa)?;
    let root_w = root_weights(g.profile(), q);
    let idx: Vec<i64> = g.indices().collect();
    let m = q.len();
    let count = idx.len();

    let key = |d: &[f64]| d.iter().map(|x| x.to_bits()).collect::<Vec<u64>>();
    let mut unique: HashMap<Vec<u64>, Vec<f64>> = HashMap::new();
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let d = displacement(g, i, j);
            unique.entry(key(&d)).or_insert(d);
        }
    }
    let computed: HashMap<Vec<u64>, DMatrix<f64>> = unique
        .into_par_iter()
        .map(|(k, d)| (k, pair_block(q, &root_w, &kernel, &d)))
        .collect();
    let diag = self_block(g.profile(), q, &root_w, &kernel, numerics)?;

    let mut matrix = DMatrix::<f64>::zeros(count * m, count * m);
    for (a, &i) in idx.iter().enumerate() {
        matrix.view_mut((a * m, a * m), (m, m)).copy_from(&diag);
        for (b, &j) in idx.iter().enumerate().skip(a + 1) {
            let blk = &computed[&key(&displacement(g, i, j))];
            matrix.view_mut((a * m, b * m), (m, m)).copy_from(blk);
            matrix.view_mut((b * m, a * m), (m, m)).copy_from(&blk.transpose());
        }
    }
    Ok(BSBlockOperator {
        kappa,
        first_index: g.first_index(),
        count,
        block_size: m,
        matrix,
    })
}
