//! Matching top and vertex fibres over overlap base points.
//!
//! Both fibres are graphs `lambda(phi) = log |w(phi)|` over the angle torus
//! of the non-graph chart coordinates; the top branch is re-solved at shifted
//! radii until the mean of `lambda_ver - lambda_top` vanishes.

use serde::{Deserialize, Serialize};

use super::fibre::{record_torus, solve_fibre, AtlasConfig, FibreKind, FibreRecord};
use super::region::BasePoint;
use crate::error::{Error, Result};
use crate::family::GlobalFamily;
use crate::linalg::C64;
use crate::spectral::{derivative_complex, spectrum, Grid};
use crate::transport::TransportedTorus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    /// `log r'_k - log r_k` of the top branch.
    pub dlog_r: Vec<f64>,
    /// `sup |dlambda| + sup |grad dlambda|` after the shift.
    pub distance: f64,
    pub t_hat: f64,
    pub iterations: usize,
    pub success: bool,
}

/// Trigonometric interpolant of real grid values (mean included).
struct Interp {
    grid: Grid,
    coeffs: Vec<C64>,
}

impl Interp {
    fn new(grid: Grid, values: &[f64]) -> Self {
        let v: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        let mut coeffs = spectrum(grid, &v);
        for (i, c) in coeffs.iter_mut().enumerate() {
            if grid.is_nyquist(&grid.multi_index(i)) {
                *c = C64::new(0.0, 0.0);
            }
        }
        Interp { grid, coeffs }
    }

    fn eval_with_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let g = self.grid;
        let mut v = 0.0;
        let mut d = vec![0.0; g.dim];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let m: Vec<f64> = g.multi_index(i).iter().map(|&k| g.freq(k) as f64).collect();
            let arg: f64 = m.iter().zip(theta).map(|(k, t)| k * t).sum();
            let e = c * C64::from_polar(1.0, arg);
            v += e.re;
            for a in 0..g.dim {
                d[a] -= e.im * m[a];
            }
        }
        (v, d)
    }
}

/// `lambda_k` of the non-graph coordinates resampled on the uniform grid of
/// their own angles.
pub fn log_radius_profile(torus: &TransportedTorus, graph_index: usize) -> Result<Vec<Vec<f64>>> {
    let grid = torus.grid;
    let n = grid.dim;
    let coord = |k: usize| if k < graph_index { k } else { k + 1 };
    let mut shift = Vec::with_capacity(n);
    let mut lambda = Vec::with_capacity(n);
    for k in 0..n {
        let c = coord(k);
        let psi: Vec<f64> = (0..grid.len())
            .map(|p| {
                let th = grid.theta(p)[k];
                let d = torus.psi[p][c].arg() - th;
                d - std::f64::consts::TAU * (d / std::f64::consts::TAU).round()
            })
            .collect();
        shift.push(Interp::new(grid, &psi));
        let lam: Vec<f64> = torus.psi.iter().map(|z| z[c].norm().ln()).collect();
        lambda.push(Interp::new(grid, &lam));
    }
    let mut out = vec![vec![0.0; grid.len()]; n];
    for p in 0..grid.len() {
        let phi = grid.theta(p);
        // solve theta + shift(theta) = phi by Newton
        let mut theta = phi.clone();
        for _ in 0..50 {
            let mut res = vec![0.0; n];
            let mut jac = nalgebra::DMatrix::<f64>::identity(n, n);
            for k in 0..n {
                let (v, d) = shift[k].eval_with_grad(&theta);
                res[k] = theta[k] + v - phi[k];
                for a in 0..n {
                    jac[(k, a)] += d[a];
                }
            }
            let rn = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let step = jac
                .lu()
                .solve(&nalgebra::DVector::from_vec(res))
                .ok_or(Error::DegenerateFrame)?;
            for a in 0..n {
                theta[a] -= step[a];
            }
            if rn < 1e-14 {
                break;
            }
        }
        for k in 0..n {
            out[k][p] = lambda[k].eval_with_grad(&theta).0;
        }
    }
    Ok(out)
}

fn profile_distance(grid: Grid, a: &[Vec<f64>], b: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let mut sup: f64 = 0.0;
    let mut means = Vec::new();
    for (x, y) in a.iter().zip(b) {
        let d: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
        means.push(d.iter().sum::<f64>() / d.len() as f64);
        let dc: Vec<C64> = d.iter().map(|&v| C64::new(v, 0.0)).collect();
        let s0 = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut s1: f64 = 0.0;
        for axis in 0..grid.dim {
            let g = derivative_complex(grid, &dc, &[axis]);
            s1 = s1.max(g.iter().fold(0.0, |m, v| m.max(v.re.abs())));
        }
        sup = sup.max(s0 + s1);
    }
    (sup, means)
}

/// Distance between two records over the same chart and face, without shifting.
pub fn record_distance(family: &GlobalFamily, a: &FibreRecord, b: &FibreRecord, cfg: &AtlasConfig) -> Result<f64> {
    let (_, ta) = record_torus(family, a, cfg)?;
    let (_, tb) = record_torus(family, b, cfg)?;
    let la = log_radius_profile(&ta, a.base.graph_index)?;
    let lb = log_radius_profile(&tb, b.base.graph_index)?;
    Ok(profile_distance(ta.grid, &la, &lb).0)
}

/// Finds the top-branch radii `r'` whose fibre coincides with the vertex
/// fibre and reports the shift and the remaining distance.
pub fn reconcile_overlap(
    family: &GlobalFamily,
    top: &FibreRecord,
    ver: &FibreRecord,
    cfg: &AtlasConfig,
    match_tol: f64,
    k_shift: f64,
) -> Result<MatchReport> {
    if top.kind != FibreKind::Top || ver.kind != FibreKind::Vertex {
        return Err(Error::config("overlap", "expects a top record and a vertex record"));
    }
    if top.base.chart != ver.base.chart || top.base.face != ver.base.face || top.t != ver.t {
        return Err(Error::config("overlap", "records must share chart, face and t"));
    }
    let (_, tv) = record_torus(family, ver, cfg)?;
    let lv = log_radius_profile(&tv, ver.base.graph_index)?;
    let mut current = top.clone();
    let mut iterations = 0;
    let (mut distance, mut means);
    loop {
        let (_, tt) = record_torus(family, &current, cfg)?;
        let lt = log_radius_profile(&tt, current.base.graph_index)?;
        let d = profile_distance(tv.grid, &lv, &lt);
        distance = d.0;
        means = d.1;
        let shift = means.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if shift < 1e-13 || iterations >= 8 {
            break;
        }
        iterations += 1;
        let radii: Vec<f64> = current
            .base
            .radii
            .iter()
            .zip(&means)
            .map(|(r, m)| r * m.exp())
            .collect();
        let base = BasePoint::from_radii(current.base.face, current.base.chart, &radii, top.t, &cfg.regions)?;
        current = solve_fibre(family, &base, FibreKind::Top, top.t, cfg)?;
    }
    let dlog_r: Vec<f64> = current
        .base
        .radii
        .iter()
        .zip(&top.base.radii)
        .map(|(a, b)| (a / b).ln())
        .collect();
    let t_hat = ver.t_hat.min(top.t_hat);
    let worst = dlog_r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let success = distance <= match_tol && worst <= k_shift * t_hat;
    if distance > match_tol {
        return Err(Error::NoMatch { distance });
    }
    Ok(MatchReport {
        dlog_r,
        distance,
        t_hat,
        iterations,
        success,
    })
}
