//! Well profiles, straight arrays of wells and shift bookkeeping.
//!
//! Potentials are stored as nonnegative magnitudes; the Hamiltonian is
//! `H = -Δ - λ Σ_j V(x - y_j)`.

use crate::error::{Error, Result};

/// Nonnegative potential sampled on a uniform grid over
/// `[0, ρ] × [0, R]` in `(|x₁|, |x_⊥|)`, bilinearly interpolated and zero
/// outside the support box.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPotential {
    n_axial: usize,
    n_radial: usize,
    values: Vec<f64>,
}

impl SampledPotential {
    /// `values[i * n_radial + k]` is the sample at `|x₁| = i ρ/(n_axial-1)`,
    /// `|x_⊥| = k R/(n_radial-1)`.
    pub fn new(n_axial: usize, n_radial: usize, values: Vec<f64>) -> Result<Self> {
        if n_axial < 2 || n_radial < 2 {
            return Err(Error::Profile("sampled potential needs at least 2x2 samples".into()));
        }
        if values.len() != n_axial * n_radial {
            return Err(Error::Profile(format!(
                "expected {} samples, got {}",
                n_axial * n_radial,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Profile(format!(
                "potential samples must be real and nonnegative, got {v}"
            )));
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::Profile("potential is identically zero".into()));
        }
        Ok(Self {
            n_axial,
            n_radial,
            values,
        })
    }

    fn eval(&self, axial: f64, radial: f64, rho: f64, radius: f64) -> f64 {
        let u = axial / rho * (self.n_axial - 1) as f64;
        let v = radial / radius * (self.n_radial - 1) as f64;
        let i = (u.floor() as usize).min(self.n_axial - 2);
        let k = (v.floor() as usize).min(self.n_radial - 2);
        let (fu, fv) = (u - i as f64, v - k as f64);
        let at = |i: usize, k: usize| self.values[i * self.n_radial + k];
        (1.0 - fu) * ((1.0 - fv) * at(i, k) + fv * at(i, k + 1))
            + fu * ((1.0 - fv) * at(i + 1, k) + fv * at(i + 1, k + 1))
    }

    fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WellShape {
    /// `V₀ exp(-|x|²/(2σ²))` inside the ball `|x| <= R`.
    GaussianTruncated { depth: f64, sigma: f64 },
    CustomSampled(SampledPotential),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    GaussianTruncated,
    CustomSampled,
}

/// Parameters accepted by [`make_profile`]. `rho` defaults to `radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileParams {
    pub nu: u32,
    pub depth: f64,
    pub sigma: f64,
    pub radius: f64,
    pub rho: Option<f64>,
    pub coupling: f64,
    pub samples: Option<SampledPotential>,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self {
            nu: 2,
            depth: 5.0,
            sigma: 0.5,
            radius: 1.0,
            rho: None,
            coupling: 1.0,
            samples: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellProfile {
    nu: u32,
    shape: WellShape,
    rho: f64,
    radius: f64,
    coupling: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Profile(format!("{name} must be positive, got {v}")))
    }
}

pub fn make_profile(kind: ProfileKind, params: &ProfileParams) -> Result<WellProfile> {
    if params.nu < 2 {
        return Err(Error::Profile(format!("dimension must be >= 2, got {}", params.nu)));
    }
    let rho = params.rho.unwrap_or(params.radius);
    positive("support radius R", params.radius)?;
    positive("support half-length rho", rho)?;
    positive("coupling", params.coupling)?;
    let shape = match kind {
        ProfileKind::GaussianTruncated => {
            if !(params.depth > 0.0) {
                return Err(Error::Profile(format!(
                    "depth V0 must be positive (V = 0 is excluded), got {}",
                    params.depth
                )));
            }
            positive("depth V0", params.depth)?;
            positive("sigma", params.sigma)?;
            if rho < params.radius {
                return Err(Error::Profile(format!(
                    "support box half-length {rho} must contain the ball of radius {}",
                    params.radius
                )));
            }
            WellShape::GaussianTruncated {
                depth: params.depth,
                sigma: params.sigma,
            }
        }
        ProfileKind::CustomSampled => WellShape::CustomSampled(
            params
                .samples
                .clone()
                .ok_or_else(|| Error::Profile("custom profile needs samples".into()))?,
        ),
    };
    Ok(WellProfile {
        nu: params.nu,
        shape,
        rho,
        radius: params.radius,
        coupling: params.coupling,
    })
}

impl WellProfile {
    /// Gaussian well with `V₀ = 5`, `σ = 0.5`, `R = ρ = 1` in the plane.
    pub fn reference_gaussian() -> Self {
        make_profile(ProfileKind::GaussianTruncated, &ProfileParams::default())
            .expect("reference parameters are valid")
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn shape(&self) -> &WellShape {
        &self.shape
    }

    pub fn kind(&self) -> ProfileKind {
        match self.shape {
            WellShape::GaussianTruncated { .. } => ProfileKind::GaussianTruncated,
            WellShape::CustomSampled(_) => ProfileKind::CustomSampled,
        }
    }

    /// ρ, the longitudinal half-length of the support box.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// R, the transverse radius of the support box.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn with_coupling(&self, coupling: f64) -> Result<Self> {
        positive("coupling", coupling)?;
        Ok(Self {
            coupling,
            ..self.clone()
        })
    }

    /// True when the support is the ball `|x| <= R` and `V` depends on `|x|` only.
    pub fn is_radial(&self) -> bool {
        matches!(self.shape, WellShape::GaussianTruncated { .. })
    }

    /// `λ V(ξ)` in local coordinates, `ξ.len() == ν`.
    pub fn potential(&self, xi: &[f64]) -> f64 {
        let perp2: f64 = xi[1..].iter().map(|t| t * t).sum();
        self.potential_split(xi[0], perp2.sqrt())
    }

    /// `λ V` at longitudinal coordinate `x1` and transverse distance `perp`.
    pub fn potential_split(&self, x1: f64, perp: f64) -> f64 {
        match &self.shape {
            WellShape::GaussianTruncated { depth, sigma } => {
                let r2 = x1 * x1 + perp * perp;
                if r2 > self.radius * self.radius {
                    0.0
                } else {
                    self.coupling * depth * (-r2 / (2.0 * sigma * sigma)).exp()
                }
            }
            WellShape::CustomSampled(s) => {
                let a = x1.abs();
                if a >= self.rho || perp >= self.radius {
                    0.0
                } else {
                    self.coupling * s.eval(a, perp, self.rho, self.radius)
                }
            }
        }
    }

    /// Radial profile `λ V(r)`; meaningful when [`is_radial`](Self::is_radial).
    pub fn radial_potential(&self, r: f64) -> f64 {
        self.potential_split(r, 0.0)
    }

    pub fn max_potential(&self) -> f64 {
        match &self.shape {
            WellShape::GaussianTruncated { depth, .. } => self.coupling * depth,
            WellShape::CustomSampled(s) => self.coupling * s.max(),
        }
    }

    /// Distance from the interior point `xi` to the support boundary along the
    /// unit direction `dir`.
    pub fn support_exit(&self, xi: &[f64], dir: &[f64]) -> f64 {
        if self.is_radial() {
            let b: f64 = xi.iter().zip(dir).map(|(x, d)| x * d).sum();
            let c: f64 = xi.iter().map(|x| x * x).sum::<f64>() - self.radius * self.radius;
            (-b + (b * b - c).max(0.0).sqrt()).max(0.0)
        } else {
            let axial = if dir[0] > 0.0 {
                (self.rho - xi[0]) / dir[0]
            } else if dir[0] < 0.0 {
                (-self.rho - xi[0]) / dir[0]
            } else {
                f64::INFINITY
            };
            let b: f64 = xi[1..].iter().zip(&dir[1..]).map(|(x, d)| x * d).sum();
            let d2: f64 = dir[1..].iter().map(|d| d * d).sum();
            let c: f64 = xi[1..].iter().map(|x| x * x).sum::<f64>() - self.radius * self.radius;
            let transverse = if d2 > 0.0 {
                (-b + (b * b - d2 * c).max(0.0).sqrt()) / d2
            } else {
                f64::INFINITY
            };
            axial.min(transverse).max(0.0)
        }
    }
}

/// `R <= ρ √(ν-1)`, the aspect condition for the displacement argument.
pub fn aspect_ok(p: &WellProfile) -> bool {
    let bound = p.rho * f64::from(p.nu - 1).sqrt();
    p.radius <= bound * (1.0 + 1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftKind {
    Unperturbed,
    Longitudinal,
    Transversal,
    Mixed,
}

/// Finite straight array `y_j = (j a, 0) + shift_j`, `j = -(count-1)/2 ..= (count-1)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    profile: WellProfile,
    spacing: f64,
    first_index: i64,
    shift_long: Vec<f64>,
    shift_perp: Vec<Vec<f64>>,
}

pub fn build_array(profile: &WellProfile, a: f64, count: usize) -> Result<ArrayGeometry> {
    let min = 2.0 * profile.rho();
    if !(a > min) || !a.is_finite() {
        return Err(Error::Spacing { spacing: a, min });
    }
    if count == 0 || count % 2 == 0 {
        return Err(Error::Config(format!("well count must be odd and positive, got {count}")));
    }
    let dim_perp = profile.nu() as usize - 1;
    Ok(ArrayGeometry {
        profile: profile.clone(),
        spacing: a,
        first_index: -((count as i64 - 1) / 2),
        shift_long: vec![0.0; count],
        shift_perp: vec![vec![0.0; dim_perp]; count],
    })
}

impl ArrayGeometry {
    pub fn profile(&self) -> &WellProfile {
        &self.profile
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn count(&self) -> usize {
        self.shift_long.len()
    }

    pub fn first_index(&self) -> i64 {
        self.first_index
    }

    pub fn last_index(&self) -> i64 {
        self.first_index + self.count() as i64 - 1
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        self.first_index..=self.last_index()
    }

    fn slot(&self, j: i64) -> Result<usize> {
        if j < self.first_index || j > self.last_index() {
            return Err(Error::Domain(format!(
                "well index {j} outside {}..={}",
                self.first_index,
                self.last_index()
            )));
        }
        Ok((j - self.first_index) as usize)
    }

    /// Current centre `y_j` (length ν).
    pub fn center(&self, j: i64) -> Vec<f64> {
        let s = (j - self.first_index) as usize;
        let mut c = Vec::with_capacity(self.profile.nu() as usize);
        c.push(j as f64 * self.spacing + self.shift_long[s]);
        c.extend_from_slice(&self.shift_perp[s]);
        c
    }

    /// Unperturbed centre `y_j⁰ = (j a, 0)`.
    pub fn reference_center(&self, j: i64) -> Vec<f64> {
        let mut c = vec![0.0; self.profile.nu() as usize];
        c[0] = j as f64 * self.spacing;
        c
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        self.indices().map(|j| self.center(j)).collect()
    }

    /// Longitudinal displacement `(y_j - y_j⁰)₁`.
    pub fn longitudinal_shift(&self, j: i64) -> f64 {
        self.shift_long[(j - self.first_index) as usize]
    }

    pub fn transversal_shift(&self, j: i64) -> &[f64] {
        &self.shift_perp[(j - self.first_index) as usize]
    }

    /// Smallest `N` with `y_j = y_j⁰` for all `|j| > N`; 0 when unperturbed.
    pub fn perturbation_window(&self) -> i64 {
        self.indices()
            .filter(|&j| self.is_displaced(j))
            .map(i64::abs)
            .max()
            .unwrap_or(0)
    }

    fn is_displaced(&self, j: i64) -> bool {
        let s = (j - self.first_index) as usize;
        self.shift_long[s] != 0.0 || self.shift_perp[s].iter().any(|&t| t != 0.0)
    }

    pub fn shift_kind(&self) -> ShiftKind {
        let long = self.shift_long.iter().any(|&d| d != 0.0);
        let perp = self.shift_perp.iter().flatten().any(|&d| d != 0.0);
        match (long, perp) {
            (false, false) => ShiftKind::Unperturbed,
            (true, false) => ShiftKind::Longitudinal,
            (false, true) => ShiftKind::Transversal,
            (true, true) => ShiftKind::Mixed,
        }
    }

    pub fn has_transversal_shift(&self) -> bool {
        self.shift_perp.iter().flatten().any(|&d| d != 0.0)
    }

    /// The same array with every well back at its reference position.
    pub fn unperturbed(&self) -> Self {
        let mut g = self.clone();
        g.shift_long.iter_mut().for_each(|d| *d = 0.0);
        g.shift_perp.iter_mut().flatten().for_each(|d| *d = 0.0);
        g
    }

    /// Displace well `index` by `(dx, dperp)` relative to its current position.
    /// An empty `dperp` means no transverse motion.
    pub fn shift_well(&self, index: i64, dx: f64, dperp: &[f64]) -> Result<Self> {
        let s = self.slot(index)?;
        let dim_perp = self.profile.nu() as usize - 1;
        if !dperp.is_empty() && dperp.len() != dim_perp {
            return Err(Error::Domain(format!(
                "transverse shift needs {dim_perp} components, got {}",
                dperp.len()
            )));
        }
        if !dx.is_finite() || dperp.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("shift components must be finite".into()));
        }
        let mut g = self.clone();
        g.shift_long[s] += dx;
        for (p, d) in g.shift_perp[s].iter_mut().zip(dperp) {
            *p += d;
        }
        g.check_disjoint()?;
        Ok(g)
    }

    fn check_disjoint(&self) -> Result<()> {
        let rho = self.profile.rho();
        let radius = self.profile.radius();
        let centers = self.centers();
        for (k, w) in centers.windows(2).enumerate() {
            if !(w[1][0] > w[0][0]) {
                return Err(Error::Disjointness(format!(
                    "well order violated between indices {} and {}",
                    self.first_index + k as i64,
                    self.first_index + k as i64 + 1
                )));
            }
        }
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                let d1 = centers[j][0] - centers[i][0];
                if d1 > 2.0 * rho {
                    // centres are ordered, so no later well can overlap well i
                    break;
                }
                let dperp: f64 = centers[i][1..]
                    .iter()
                    .zip(&centers[j][1..])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if dperp <= 2.0 * radius {
                    return Err(Error::Disjointness(format!(
                        "supports of wells {} and {} overlap (gap {:.6} <= 2ρ = {})",
                        self.first_index + i as i64,
                        self.first_index + j as i64,
                        d1,
                        2.0 * rho
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn relative_shifts(&self) -> ShiftData {
        ShiftData {
            first_index: self.first_index,
            displacement: self.shift_long.clone(),
        }
    }
}

pub fn relative_shifts(g: &ArrayGeometry) -> ShiftData {
    g.relative_shifts()
}

/// `δ_j = (y_{j+1} - y_j)₁ - a` and `η_ij = (y_i - y_i⁰ - y_j + y_j⁰)₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftData {
    first_index: i64,
    displacement: Vec<f64>,
}

impl ShiftData {
    /// `(j, δ_j)` for `j` from the first to the second-to-last well.
    pub fn deltas(&self) -> Vec<(i64, f64)> {
        self.displacement
            .windows(2)
            .enumerate()
            .map(|(k, w)| (self.first_index + k as i64, w[1] - w[0]))
            .collect()
    }

    pub fn delta(&self, j: i64) -> f64 {
        let k = j - self.first_index;
        if k < 0 || k + 1 >= self.displacement.len() as i64 {
            0.0
        } else {
            self.displacement[k as usize + 1] - self.displacement[k as usize]
        }
    }

    pub fn delta_sum(&self) -> f64 {
        self.deltas().iter().map(|(_, d)| d).sum()
    }

    pub fn eta(&self, i: i64, j: i64) -> f64 {
        self.displacement_of(i) - self.displacement_of(j)
    }

    fn displacement_of(&self, j: i64) -> f64 {
        let k = j - self.first_index;
        if k < 0 || k >= self.displacement.len() as i64 {
            0.0
        } else {
            self.displacement[k as usize]
        }
    }
}
