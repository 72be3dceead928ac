//! Base points on the boundary of the moment simplex and their regions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::GlobalFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionTag {
    Top,
    Ver,
    Overlap,
    Excluded,
}

impl RegionTag {
    pub fn allows_top(self) -> bool {
        matches!(self, RegionTag::Top | RegionTag::Overlap)
    }

    pub fn allows_vertex(self) -> bool {
        matches!(self, RegionTag::Ver | RegionTag::Overlap)
    }
}

/// Region constants: vertex balls of radius `c_v t^{1/(n+1)}` in chart
/// radii, top region where every non-graph radius is at least `c_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConstants {
    pub c_v: f64,
    /// Absolute top threshold; `c_v t^{1/(n+1)} / 2` when absent.
    pub c_f: Option<f64>,
}

impl Default for RegionConstants {
    fn default() -> Self {
        RegionConstants { c_v: 8.0, c_f: None }
    }
}

impl RegionConstants {
    pub fn vertex_radius(&self, t: f64, n: usize) -> f64 {
        self.c_v * t.powf(1.0 / (n as f64 + 1.0))
    }

    pub fn top_radius(&self, t: f64, n: usize) -> f64 {
        self.c_f.unwrap_or_else(|| 0.5 * self.vertex_radius(t, n))
    }
}

/// A point of a top face `{mu_g = 0}` of the Fubini–Study simplex, described
/// in the vertex chart `a` of its largest coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasePoint {
    /// Homogeneous moment coordinates, summing to one, with `moment[face] = 0`.
    pub moment: Vec<f64>,
    pub face: usize,
    pub chart: usize,
    /// Chart index of the face coordinate.
    pub graph_index: usize,
    /// Radii of the remaining chart coordinates, in chart order.
    pub radii: Vec<f64>,
    pub region: RegionTag,
}

impl BasePoint {
    pub fn new(moment: &[f64], face: usize, t: f64, consts: &RegionConstants) -> Result<Self> {
        let sum: f64 = moment.iter().sum();
        if face >= moment.len() || moment.iter().any(|v| *v < 0.0) || sum <= 0.0 {
            return Err(Error::config("base", "moment point must be nonnegative with a valid face"));
        }
        let mut mu: Vec<f64> = moment.iter().map(|v| v / sum).collect();
        mu[face] = 0.0;
        let s2: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|v| *v /= s2);
        let chart = (0..mu.len())
            .filter(|&k| k != face)
            .fold(usize::MAX, |best, k| if best == usize::MAX || mu[k] > mu[best] { k } else { best });
        let graph_index = GlobalFamily::chart_index(chart, face);
        let radii: Vec<f64> = (0..mu.len())
            .filter(|&k| k != chart && k != face)
            .map(|k| (mu[k] / mu[chart]).sqrt())
            .collect();
        if radii.iter().any(|r| *r == 0.0) {
            return Err(Error::config("base", "point lies on a lower-dimensional face"));
        }
        let n = radii.len();
        let region = classify_radii(&radii, t, n, consts);
        Ok(BasePoint {
            moment: mu,
            face,
            chart,
            graph_index,
            radii,
            region,
        })
    }

    /// Base point of face `face` in chart `chart` with the given radii.
    pub fn from_radii(face: usize, chart: usize, radii: &[f64], t: f64, consts: &RegionConstants) -> Result<Self> {
        let nn = radii.len() + 1;
        if face > nn || chart > nn || face == chart {
            return Err(Error::config("base", "face and chart must be distinct homogeneous indices"));
        }
        let mut mu = vec![0.0; nn + 1];
        mu[chart] = 1.0;
        let mut it = radii.iter();
        for (k, m) in mu.iter_mut().enumerate() {
            if k != chart && k != face {
                *m = it.next().map(|r| r * r).unwrap_or(0.0);
            }
        }
        let mut b = Self::new(&mu, face, t, consts)?;
        if b.chart != chart {
            // keep the requested chart even when another coordinate dominates
            b.chart = chart;
            b.graph_index = GlobalFamily::chart_index(chart, face);
            b.radii = radii.to_vec();
            b.region = classify_radii(radii, t, radii.len(), consts);
        }
        Ok(b)
    }

    /// `nu`: smallest radius for top fibres.
    pub fn nu_top(&self) -> f64 {
        self.radii.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `nu`: geometric mean of the non-graph radii for vertex fibres.
    pub fn nu_vertex(&self) -> f64 {
        let n = self.radii.len() as f64;
        (self.radii.iter().map(|r| r.ln()).sum::<f64>() / n).exp()
    }
}

/// `t_hat = t / nu^{n+1}`.
pub fn t_hat(t: f64, nu: f64, n: usize) -> f64 {
    t / nu.powi(n as i32 + 1)
}

fn classify_radii(radii: &[f64], t: f64, n: usize, consts: &RegionConstants) -> RegionTag {
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let rmin = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let ver = rmax <= consts.vertex_radius(t, n);
    let top = rmin >= consts.top_radius(t, n);
    match (top, ver) {
        (true, true) => RegionTag::Overlap,
        (true, false) => RegionTag::Top,
        (false, true) => RegionTag::Ver,
        (false, false) => RegionTag::Excluded,
    }
}

/// Region of a moment point on the boundary of the simplex.
pub fn classify_region(moment: &[f64], t: f64, consts: &RegionConstants) -> RegionTag {
    let face = (0..moment.len())
        .fold(0, |best, k| if moment[k] < moment[best] { k } else { best });
    let n = moment.len().saturating_sub(2);
    let sum: f64 = moment.iter().sum();
    let top = (0..moment.len()).fold(0, |best, k| if moment[k] > moment[best] { k } else { best });
    if moment[top] >= sum * (1.0 - 1e-15) {
        return RegionTag::Ver;
    }
    match BasePoint::new(moment, face, t, consts) {
        Ok(b) => b.region,
        Err(_) => {
            // on a lower-dimensional face: vertex balls still apply
            let radii: Vec<f64> = (0..moment.len())
                .filter(|&k| k != top && k != face)
                .map(|k| (moment[k] / moment[top]).sqrt())
                .collect();
            if radii.iter().copied().fold(0.0, f64::max) <= consts.vertex_radius(t, n) {
                RegionTag::Ver
            } else {
                RegionTag::Excluded
            }
        }
    }
}
