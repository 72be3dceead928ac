//! Run configuration read from TOML.
//!
//! ```toml
//! t = 1e-3
//! out = "out"
//!
//! [family]
//! preset = "fermat-cubic"        # or ambient_dim + support (+ weights, tau, phases)
//!
//! [atlas]
//! metric = "fubini-study"
//! grid_size = 128
//! [atlas.solver]
//! tol = 1e-9
//! [atlas.regions]
//! c_v = 8.0
//!
//! [base]                         # solve-fibre
//! kind = "top"
//! moment = [0.0, 0.8, 0.2]
//! face = 0
//!
//! [fibration]                    # build-fibration
//! samples = 24
//!
//! [monodromy]                    # monodromy
//! loop = "edge"
//! edge = [0, 1]
//! vertex = 3
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atlas::{
    base_circle_loop, edge_loop, AtlasConfig, BasePoint, FibreKind, LoopPoint,
};
use crate::error::{Error, Result};
use crate::family::GlobalFamily;
use crate::toric::ReflexivePolytopePair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub preset: Option<String>,
    pub ambient_dim: Option<usize>,
    /// Homogeneous exponents of degree `N + 1`.
    pub support: Option<Vec<Vec<i64>>>,
    pub weights: Option<Vec<f64>>,
    pub tau: Option<f64>,
    pub phases: Option<Vec<f64>>,
}

impl FamilySpec {
    pub fn build(&self) -> Result<GlobalFamily> {
        match (&self.preset, &self.support) {
            (Some(_), Some(_)) => Err(Error::config("family", "give either preset or support, not both")),
            (Some(p), None) => {
                let mut f = GlobalFamily::preset(p)?;
                if let Some(tau) = self.tau {
                    let polytope = f.polytope.clone();
                    let local = f.local_model;
                    f = GlobalFamily::new(&f.name, polytope, tau, self.phases.clone())?;
                    f.local_model = local;
                } else if let Some(ph) = &self.phases {
                    f = GlobalFamily::new(&f.name, f.polytope.clone(), f.tau, Some(ph.clone()))?;
                }
                Ok(f)
            }
            (None, Some(support)) => {
                let n = self
                    .ambient_dim
                    .ok_or_else(|| Error::config("family.ambient_dim", "required with an explicit support"))?;
                let polytope = ReflexivePolytopePair::projective(n, support, self.weights.clone())?;
                GlobalFamily::new("explicit", polytope, self.tau.unwrap_or(0.5), self.phases.clone())
            }
            (None, None) => Err(Error::config("family", "missing preset or support")),
        }
    }
}

/// One fibre to solve: a moment point on a face, or explicit chart radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseSpec {
    pub kind: FibreKind,
    pub face: usize,
    pub moment: Option<Vec<f64>>,
    pub chart: Option<usize>,
    pub radii: Option<Vec<f64>>,
}

impl BaseSpec {
    pub fn base_point(&self, t: f64, cfg: &AtlasConfig) -> Result<BasePoint> {
        match (&self.moment, &self.chart, &self.radii) {
            (Some(m), None, None) => BasePoint::new(m, self.face, t, &cfg.regions),
            (None, Some(c), Some(r)) => BasePoint::from_radii(self.face, *c, r, t, &cfg.regions),
            _ => Err(Error::config("base", "give either moment, or chart and radii")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FibrationSpec {
    /// Lattice points per direction on every top face.
    pub samples: usize,
    /// Largest accepted overlap distance.
    pub match_tol: f64,
    /// Accepted radius shift as a multiple of `t_hat`.
    pub k_shift: f64,
}

impl Default for FibrationSpec {
    fn default() -> Self {
        FibrationSpec {
            samples: 24,
            match_tol: 1e-6,
            k_shift: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopPointSpec {
    pub kind: FibreKind,
    pub face: usize,
    pub chart: usize,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "loop", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LoopSpec {
    /// Around the edge `{mu_g = mu_h = 0}` of the simplex in `P^3`.
    Edge {
        edge: (usize, usize),
        vertex: usize,
        #[serde(default = "default_per_segment")]
        per_segment: usize,
    },
    /// Once around the boundary of the triangle (`P^2`).
    BaseCircle {
        #[serde(default = "default_per_segment")]
        per_segment: usize,
    },
    Points { points: Vec<LoopPointSpec> },
}

fn default_per_segment() -> usize {
    4
}

impl LoopSpec {
    pub fn points(&self, family: &GlobalFamily, t: f64, cfg: &AtlasConfig) -> Result<Vec<LoopPoint>> {
        match self {
            LoopSpec::Edge {
                edge,
                vertex,
                per_segment,
            } => edge_loop(family, *edge, *vertex, t, cfg, *per_segment),
            LoopSpec::BaseCircle { per_segment } => base_circle_loop(family, t, cfg, *per_segment),
            LoopSpec::Points { points } => points
                .iter()
                .map(|p| {
                    Ok(LoopPoint {
                        kind: p.kind,
                        base: BasePoint::from_radii(p.face, p.chart, &p.radii, t, &cfg.regions)?,
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmoebaSpec {
    pub density: usize,
}

impl Default for AmoebaSpec {
    fn default() -> Self {
        AmoebaSpec { density: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: FamilySpec,
    pub t: Option<f64>,
    #[serde(default)]
    pub t_list: Vec<f64>,
    #[serde(default)]
    pub atlas: AtlasConfig,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub base: Option<BaseSpec>,
    #[serde(default)]
    pub fibration: FibrationSpec,
    pub monodromy: Option<LoopSpec>,
    #[serde(default)]
    pub amoeba: AmoebaSpec,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config("config", e.message().to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Parameter values to run, `t` first.
    pub fn ts(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.t.into_iter().collect();
        v.extend(self.t_list.iter().copied());
        v
    }

    /// Checks tolerances, the family and the near-large-complex-limit gate.
    pub fn validate(&self) -> Result<GlobalFamily> {
        let family = self.family.build()?;
        self.atlas.validate()?;
        let ts = self.ts();
        if ts.is_empty() {
            return Err(Error::config("t", "missing"));
        }
        for &t in &ts {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::config("t", "must be a nonnegative number"));
            }
            if !family.near_lcl(t) {
                log::warn!("t = {t:e} is outside the near-large-complex-limit range of `{}`", family.name);
            }
        }
        if self.fibration.samples < 2 {
            return Err(Error::config("fibration.samples", "must be at least 2"));
        }
        if !(self.fibration.match_tol > 0.0) {
            return Err(Error::config("fibration.match_tol", "must be positive"));
        }
        if self.amoeba.density < 2 {
            return Err(Error::config("amoeba.density", "must be at least 2"));
        }
        Ok(family)
    }

    /// SHA-256 of the canonical JSON form, hex encoded. The output
    /// directory and thread count do not affect results and are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.jobs = None;
        let canon = serde_json::to_string(&c).unwrap_or_default();
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}
