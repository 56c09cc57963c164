//! Flat `key = value` run configuration with dotted sections.
//!
//! ```text
//! # the reference experiment
//! dimension = 2
//! well.kind = gaussian
//! well.v0 = 5
//! well.sigma = 0.5
//! array.spacing = 5
//! array.count = 11
//! array.shift.0 = 0:1.0:0.0     # index:dx:dperp
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::bs_solver::{build_grid, build_polar_grid, BsNumerics, QuadratureGrid, SelfTerm};
use crate::direct_solver::DirectNumerics;
use crate::error::{Error, Result};
use crate::floquet::FdNumerics;
use crate::geometry::{build_array, make_profile, ArrayGeometry, ProfileKind, ProfileParams, SampledPotential, WellProfile};

/// One displacement `(index, dx, dperp)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Shift {
    pub index: i64,
    pub dx: f64,
    pub dperp: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsGridKind {
    Polar,
    Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsConfig {
    pub grid: BsGridKind,
    pub radial: usize,
    pub angular: usize,
    pub axis: usize,
    /// Upper end of the bisection bracket; the lower end is the threshold.
    pub kappa_hi: f64,
    pub numerics: BsNumerics,
}

/// Sampling of `min:max:count` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapConfig {
    pub index: i64,
    pub dx: Axis,
    pub dperp: Axis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    pub nu: u32,
    pub kappa: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub suites: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: WellProfile,
    pub spacing: f64,
    pub count: usize,
    pub shifts: Vec<Shift>,
    pub bs: BsConfig,
    pub floquet: FdNumerics,
    pub thetas: usize,
    pub bands: usize,
    pub direct: DirectNumerics,
    pub map: MapConfig,
    pub kernel: KernelConfig,
    pub verify: VerifyConfig,
    pub output_dir: Option<PathBuf>,
}

const KNOWN: &[&str] = &[
    "dimension",
    "well.kind",
    "well.v0",
    "well.sigma",
    "well.radius",
    "well.rho",
    "well.coupling",
    "well.samples.axial",
    "well.samples.radial",
    "well.samples.values",
    "array.spacing",
    "array.count",
    "bs.grid",
    "bs.radial",
    "bs.angular",
    "bs.axis",
    "bs.kappa_hi",
    "bs.self_term",
    "bs.ray_angles",
    "bs.ray_nodes",
    "floquet.cutoff",
    "floquet.step",
    "floquet.subsamples",
    "floquet.thetas",
    "floquet.bands",
    "direct.cutoff",
    "direct.step",
    "direct.subsamples",
    "direct.box",
    "direct.k",
    "direct.spread_tolerance",
    "map.index",
    "map.dx",
    "map.dperp",
    "kernel.nu",
    "kernel.kappa",
    "kernel.r_min",
    "kernel.r_max",
    "kernel.points",
    "verify.suites",
    "verify.seed",
    "output.dir",
];

struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let key = k.trim().to_string();
            let known = KNOWN.contains(&key.as_str()) || key.starts_with("array.shift.");
            if !known {
                return Err(Error::Config(format!("line {}: unknown key '{key}'", n + 1)));
            }
            if map.insert(key.clone(), (n + 1, v.trim().to_string())).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", n + 1)));
            }
        }
        Ok(Self(map))
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.0.get(key) {
            None => Ok(default),
            Some((line, v)) => v
                .parse()
                .map_err(|_| Error::Config(format!("line {line}: cannot parse {key} = '{v}'"))),
        }
    }

    fn opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("line {line}: cannot parse {key} = '{v}'"))),
        }
    }

    fn text(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|(_, v)| v.as_str())
    }

    fn floats(&self, key: &str, sep: char) -> Result<Option<Vec<f64>>> {
        match self.0.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(sep)
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("line {line}: bad number in {key} = '{v}'")))
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
        }
    }

    fn axis(&self, key: &str, default: Axis) -> Result<Axis> {
        let Some(parts) = self.floats(key, ':')? else {
            return Ok(default);
        };
        let line = self.0[key].0;
        match parts[..] {
            [min, max, count] if count >= 1.0 && count.fract() == 0.0 && max >= min => Ok(Axis {
                min,
                max,
                count: count as usize,
            }),
            _ => Err(Error::Config(format!("line {line}: {key} must be min:max:count"))),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let e = Entries::parse(text)?;
        let nu: u32 = e.get("dimension", 2)?;
        let defaults = ProfileParams::default();
        let kind = match e.text("well.kind").unwrap_or("gaussian") {
            "gaussian" => ProfileKind::GaussianTruncated,
            "sampled" => ProfileKind::CustomSampled,
            other => return Err(Error::Config(format!("unknown well.kind '{other}'"))),
        };
        let samples = match kind {
            ProfileKind::CustomSampled => {
                let values = e
                    .floats("well.samples.values", ',')?
                    .ok_or_else(|| Error::Config("well.samples.values is required for sampled wells".into()))?;
                Some(SampledPotential::new(
                    e.get("well.samples.axial", 0)?,
                    e.get("well.samples.radial", 0)?,
                    values,
                )?)
            }
            ProfileKind::GaussianTruncated => None,
        };
        let params = ProfileParams {
            nu,
            depth: e.get("well.v0", defaults.depth)?,
            sigma: e.get("well.sigma", defaults.sigma)?,
            radius: e.get("well.radius", defaults.radius)?,
            rho: e.opt("well.rho")?,
            coupling: e.get("well.coupling", defaults.coupling)?,
            samples,
        };
        let profile = make_profile(kind, &params)?;

        let spacing: f64 = e.get("array.spacing", 5.0)?;
        let count: usize = e.get("array.count", 11)?;
        let mut shifts = Vec::new();
        for (key, (line, v)) in e.0.range("array.shift.".to_string()..) {
            if !key.starts_with("array.shift.") {
                break;
            }
            let parts: Vec<f64> = v
                .split(':')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Config(format!("line {line}: {key} must be index:dx[:dperp...]")))?;
            if parts.len() < 2 || parts[0].fract() != 0.0 {
                return Err(Error::Config(format!("line {line}: {key} must be index:dx[:dperp...]")));
            }
            shifts.push(Shift {
                index: parts[0] as i64,
                dx: parts[1],
                dperp: parts[2..].to_vec(),
            });
        }

        let self_term = match e.text("bs.self_term").unwrap_or("subtraction") {
            "subtraction" => SelfTerm::Subtraction,
            "ball" => SelfTerm::BallAverage,
            other => return Err(Error::Config(format!("unknown bs.self_term '{other}'"))),
        };
        let bsd = BsNumerics::default();
        let bs = BsConfig {
            grid: match e.text("bs.grid").unwrap_or("polar") {
                "polar" => BsGridKind::Polar,
                "tensor" => BsGridKind::Tensor,
                other => return Err(Error::Config(format!("unknown bs.grid '{other}'"))),
            },
            radial: e.get("bs.radial", 12)?,
            angular: e.get("bs.angular", 24)?,
            axis: e.get("bs.axis", 24)?,
            kappa_hi: e.get("bs.kappa_hi", 3.0)?,
            numerics: BsNumerics {
                self_term,
                ray_angles: e.get("bs.ray_angles", bsd.ray_angles)?,
                ray_nodes: e.get("bs.ray_nodes", bsd.ray_nodes)?,
            },
        };

        let fd = FdNumerics::default();
        let floquet = FdNumerics {
            transverse_cutoff: e.get("floquet.cutoff", fd.transverse_cutoff)?,
            step: e.get("floquet.step", fd.step)?,
            subsamples: e.get("floquet.subsamples", fd.subsamples)?,
        };
        let dd = DirectNumerics::default();
        let box_x = match e.floats("direct.box", ':')? {
            None => None,
            Some(v) if v.len() == 2 && v[0] < v[1] => Some((v[0], v[1])),
            Some(_) => return Err(Error::Config("direct.box must be x_min:x_max".into())),
        };
        let direct = DirectNumerics {
            step: e.get("direct.step", dd.step)?,
            transverse_cutoff: e.get("direct.cutoff", dd.transverse_cutoff)?,
            subsamples: e.get("direct.subsamples", dd.subsamples)?,
            box_x,
            k: e.get("direct.k", dd.k)?,
            spread_tolerance: e.get("direct.spread_tolerance", dd.spread_tolerance)?,
        };

        let map = MapConfig {
            index: e.get("map.index", 0)?,
            dx: e.axis(
                "map.dx",
                Axis {
                    min: 0.0,
                    max: 1.5,
                    count: 20,
                },
            )?,
            dperp: e.axis(
                "map.dperp",
                Axis {
                    min: 0.0,
                    max: 1.8,
                    count: 10,
                },
            )?,
        };
        let kernel = KernelConfig {
            nu: e.get("kernel.nu", nu)?,
            kappa: e.get("kernel.kappa", 1.0)?,
            r_min: e.get("kernel.r_min", 0.05)?,
            r_max: e.get("kernel.r_max", 50.0)?,
            points: e.get("kernel.points", 200)?,
        };
        let verify = VerifyConfig {
            suites: e
                .text("verify.suites")
                .unwrap_or("convexity,mollifier,shifts")
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
            seed: e.get("verify.seed", 20240601)?,
        };
        let cfg = RunConfig {
            profile,
            spacing,
            count,
            shifts,
            bs,
            floquet,
            thetas: e.get("floquet.thetas", 32)?,
            bands: e.get("floquet.bands", 3)?,
            direct,
            map,
            kernel,
            verify,
            output_dir: e.text("output.dir").map(PathBuf::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cross-field checks of every module the commands touch.
    fn validate(&self) -> Result<()> {
        self.geometry()?;
        if self.profile.nu() == 2 {
            self.floquet.validate(&self.profile)?;
            FdNumerics {
                transverse_cutoff: self.direct.transverse_cutoff,
                step: self.direct.step,
                subsamples: self.direct.subsamples,
            }
            .validate(&self.profile)?;
        }
        if self.thetas == 0 || self.bands == 0 || self.direct.k == 0 {
            return Err(Error::Config("floquet.thetas, floquet.bands and direct.k must be positive".into()));
        }
        if !(self.bs.kappa_hi > 0.0) {
            return Err(Error::Config("bs.kappa_hi must be positive".into()));
        }
        if !(self.kernel.r_min > 0.0 && self.kernel.r_max > self.kernel.r_min && self.kernel.points >= 2) {
            return Err(Error::Config("kernel table needs 0 < r_min < r_max and 2 points".into()));
        }
        if !self.geometry()?.indices().contains(&self.map.index) {
            return Err(Error::Config(format!("map.index {} outside the array", self.map.index)));
        }
        for s in &self.verify.suites {
            if !SUITES.contains(&s.as_str()) {
                return Err(Error::Config(format!("unknown verify suite '{s}'")));
            }
        }
        self.quadrature()?;
        Ok(())
    }

    /// The reference array with every configured shift applied.
    pub fn geometry(&self) -> Result<ArrayGeometry> {
        let mut g = build_array(&self.profile, self.spacing, self.count)?;
        for s in &self.shifts {
            g = g.shift_well(s.index, s.dx, &s.dperp)?;
        }
        Ok(g)
    }

    pub fn reference_geometry(&self) -> Result<ArrayGeometry> {
        build_array(&self.profile, self.spacing, self.count)
    }

    pub fn quadrature(&self) -> Result<QuadratureGrid> {
        match self.bs.grid {
            BsGridKind::Polar => build_polar_grid(&self.profile, self.bs.radial, self.bs.angular),
            BsGridKind::Tensor => build_grid(&self.profile, &[self.bs.axis]),
        }
    }
}

pub const SUITES: &[&str] = &["convexity", "mollifier", "shifts"];
