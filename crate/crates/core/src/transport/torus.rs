//! Transport of Lagrangian graphs into the moving hypersurface, spectral
//! tangent frames and the pulled-back phase.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::{FibreProblem, LagrangianGraph};
use super::integrator::{Flow, FlowSettings, FlowStats, StepMode};
use crate::error::{Error, Result};
use crate::family::chart::normalized_form_from_gradient;
use crate::family::{FamilyChart, Param};
use crate::linalg::{CMat, C64};
use crate::spectral::{spectrum, synthesize, Grid};
use crate::toric::ToricKahlerPotential;

/// Largest admissible derivative energy fraction in the top third of modes.
pub const ALIAS_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportedTorus {
    pub grid: Grid,
    pub u: f64,
    pub param: Param,
    pub t: f64,
    pub s: f64,
    /// `Psi_u(theta)` in chart coordinates, grid order.
    pub psi: Vec<Vec<C64>>,
    /// `frames[i][a] = d Psi_u / d theta_a` at grid point `i`.
    pub frames: Vec<Vec<Vec<C64>>>,
}

impl FibreProblem {
    pub fn flow(&self) -> Flow<'_> {
        Flow {
            chart: &self.chart,
            metric: &self.metric,
            path: self.path(),
        }
    }

    /// Flows each start point from `u = 0` to `u`, in parallel, in input order.
    pub fn transport_points(&self, starts: &[Vec<C64>], u: f64) -> Result<Vec<Vec<C64>>> {
        self.transport_points_with(starts, u, &self.settings)
    }

    pub fn transport_points_with(
        &self,
        starts: &[Vec<C64>],
        u: f64,
        settings: &FlowSettings,
    ) -> Result<Vec<Vec<C64>>> {
        let flow = self.flow();
        starts
            .par_iter()
            .map(|z| flow.integrate(z, 0.0, u, settings).map(|(z, _)| z))
            .collect()
    }

    /// Step count for fixed-step transport to `u`: twice the largest number
    /// of accepted adaptive steps over a sample of reference points.
    pub fn calibrate_steps(&self, grid: Grid, u: f64, tol: f64) -> Result<usize> {
        if u == 0.0 {
            return Ok(1);
        }
        let pilot = FlowSettings {
            mode: StepMode::Adaptive { tol },
            ..self.settings
        };
        let stride = (grid.len() / 16).max(1);
        let flow = self.flow();
        let stats: Vec<FlowStats> = (0..grid.len())
            .step_by(stride)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&i| {
                let z0 = self.reference.embed(&grid.theta(i), &self.reference.mu0)?;
                flow.integrate(&z0, 0.0, u, &pilot).map(|(_, s)| s)
            })
            .collect::<Result<_>>()?;
        let most = stats.iter().map(|s| s.accepted).max().unwrap_or(1);
        Ok((2 * most).max(4))
    }

    /// Switches to fixed steps calibrated for transport to `u`.
    pub fn with_fixed_steps(&self, grid: Grid, u: f64, tol: f64) -> Result<FibreProblem> {
        let steps = self.calibrate_steps(grid, u, tol)?;
        let mut p = self.clone();
        p.settings.mode = StepMode::Fixed { steps };
        Ok(p)
    }

    /// `Psi_u` of a graph together with spectral frames.
    pub fn transport_lagrangian(&self, graph: &LagrangianGraph, u: f64) -> Result<TransportedTorus> {
        graph.validate()?;
        let starts = graph.start_points()?;
        let psi = self.transport_points(&starts, u)?;
        let frames = spectral_frames(graph.grid(), &psi)?;
        let (t, s) = self.state(u);
        Ok(TransportedTorus {
            grid: graph.grid(),
            u,
            param: self.path().param,
            t,
            s,
            psi,
            frames,
        })
    }

    /// Pulled-back phase of a transported torus.
    pub fn pullback_phase(&self, torus: &TransportedTorus) -> Result<Vec<f64>> {
        pullback_phase(&self.chart, torus)
    }

    /// Source and target values of `omega` on a pair of action-angle
    /// directions `(dtheta, dmu)` at a reference point, pushed forward by
    /// central differences of the flow map.
    pub fn symplectic_pair(
        &self,
        theta: &[f64],
        mu: &[f64],
        a: &[f64],
        b: &[f64],
        u: f64,
        eps: f64,
    ) -> Result<(f64, f64)> {
        let n = self.reference.n;
        let point = |dir: &[f64], e: f64| -> Result<Vec<C64>> {
            let th: Vec<f64> = (0..n).map(|k| theta[k] + e * dir[k]).collect();
            let m: Vec<f64> = (0..n).map(|k| mu[k] + e * dir[n + k]).collect();
            self.reference.embed(&th, &m)
        };
        let flow = self.flow();
        let tangent = |dir: &[f64], image: bool| -> Result<Vec<C64>> {
            let mut acc = vec![C64::new(0.0, 0.0); n + 1];
            for (w, e) in [(-1.0 / 12.0, 2.0), (8.0 / 12.0, 1.0), (-8.0 / 12.0, -1.0), (1.0 / 12.0, -2.0)] {
                let mut z = point(dir, e * eps)?;
                if image {
                    z = flow.integrate(&z, 0.0, u, &self.settings)?.0;
                }
                for (a, v) in acc.iter_mut().zip(&z) {
                    *a += v * (w / eps);
                }
            }
            Ok(acc)
        };
        let z0 = point(a, 0.0)?;
        let z1 = flow.integrate(&z0, 0.0, u, &self.settings)?.0;
        let src = kahler_form(&self.metric, &z0, &tangent(a, false)?, &tangent(b, false)?)?;
        let tgt = kahler_form(&self.metric, &z1, &tangent(a, true)?, &tangent(b, true)?)?;
        Ok((src, tgt))
    }
}

/// `omega(u, v) = 2 Im sum H_ab u_a conj(v_b)`.
pub fn kahler_form(metric: &ToricKahlerPotential, z: &[C64], u: &[C64], v: &[C64]) -> Result<f64> {
    let h = metric.hermitian(z)?;
    Ok(2.0 * hermitian_pair(&h, u, v).im)
}

/// `g(u, u) = 2 Re sum H_ab u_a conj(u_b)`.
pub fn metric_norm_sqr(metric: &ToricKahlerPotential, z: &[C64], u: &[C64]) -> Result<f64> {
    let h = metric.hermitian(z)?;
    Ok(2.0 * hermitian_pair(&h, u, u).re)
}

fn hermitian_pair(h: &CMat, u: &[C64], v: &[C64]) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for a in 0..u.len() {
        for b in 0..v.len() {
            s += h[(a, b)] * u[a] * v[b].conj();
        }
    }
    s
}

/// Spectral `theta`-derivatives of grid values, with the aliasing guard.
pub fn spectral_frames(grid: Grid, psi: &[Vec<C64>]) -> Result<Vec<Vec<Vec<C64>>>> {
    let comps = psi.first().map(|z| z.len()).unwrap_or(0);
    let freqs = grid.frequencies();
    let cut = grid.size as i64 / 3;
    let mut frames = vec![vec![vec![C64::new(0.0, 0.0); comps]; grid.dim]; grid.len()];
    let per_comp: Vec<(Vec<Vec<C64>>, f64)> = (0..comps)
        .into_par_iter()
        .map(|c| {
            let vals: Vec<C64> = psi.iter().map(|z| z[c]).collect();
            let spec = spectrum(grid, &vals);
            let (mut top, mut total) = (0.0, 0.0);
            for (m, v) in freqs.iter().zip(&spec) {
                let e = v.norm_sqr() * m.iter().map(|k| (k * k) as f64).sum::<f64>();
                total += e;
                if m.iter().any(|k| k.abs() > cut) {
                    top += e;
                }
            }
            let frac = if total > 0.0 { top / total } else { 0.0 };
            let derivs = (0..grid.dim)
                .map(|a| {
                    let d: Vec<C64> = spec
                        .iter()
                        .zip(&freqs)
                        .enumerate()
                        .map(|(i, (v, m))| {
                            if grid.is_nyquist(&grid.multi_index(i)) {
                                C64::new(0.0, 0.0)
                            } else {
                                v * C64::new(0.0, m[a] as f64)
                            }
                        })
                        .collect();
                    synthesize(grid, &d)
                })
                .collect();
            (derivs, frac)
        })
        .collect();
    for (c, (derivs, frac)) in per_comp.into_iter().enumerate() {
        if frac > ALIAS_LIMIT {
            return Err(Error::AliasedFrame { fraction: frac });
        }
        for (a, d) in derivs.into_iter().enumerate() {
            for (i, v) in d.into_iter().enumerate() {
                frames[i][a][c] = v;
            }
        }
    }
    Ok(frames)
}

/// Normalized form `t Omega_t` on the frame at every grid point.
pub fn form_values(chart: &FamilyChart, torus: &TransportedTorus) -> Result<Vec<C64>> {
    torus
        .psi
        .par_iter()
        .zip(torus.frames.par_iter())
        .map(|(z, fr)| {
            let (_, grad) = chart.evaluate_defining(z, torus.t, torus.s);
            normalized_form_from_gradient(&grad, fr, None)
        })
        .collect()
}

/// Continuous phase `Im log Omega_t(frame)` on the grid, defined up to one
/// global multiple of `2 pi`.
pub fn pullback_phase(chart: &FamilyChart, torus: &TransportedTorus) -> Result<Vec<f64>> {
    let vals = form_values(chart, torus)?;
    let raw: Vec<f64> = vals.iter().map(|v| v.arg()).collect();
    unwrap_phase(torus.grid, &raw)
}

fn wrap(d: f64) -> f64 {
    use std::f64::consts::PI;
    d - 2.0 * PI * ((d + PI) / (2.0 * PI)).floor()
}

/// Unwraps raw arguments along grid lines in row-major order and checks
/// the result against the column-major continuation and the periodic seams.
pub fn unwrap_phase(grid: Grid, raw: &[f64]) -> Result<Vec<f64>> {
    let limit = std::f64::consts::FRAC_PI_2;
    let run = |row_major: bool| -> Result<Vec<f64>> {
        let mut out = vec![0.0; raw.len()];
        out[0] = raw[0];
        for i in 1..raw.len() {
            let mut m = grid.multi_index(i);
            let axis = if row_major {
                (0..grid.dim).rev().find(|&a| m[a] > 0)
            } else {
                (0..grid.dim).find(|&a| m[a] > 0)
            }
            .expect("nonzero index");
            m[axis] -= 1;
            let p = grid.flat_index(&m);
            let d = wrap(raw[i] - raw[p]);
            if d.abs() > limit {
                return Err(Error::PhaseWrapFailure { jump: d.abs() });
            }
            out[i] = out[p] + d;
        }
        Ok(out)
    };
    let row = run(true)?;
    let col = run(false)?;
    let dev = row.iter().zip(&col).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if dev > 1.0 {
        return Err(Error::PhaseWrapFailure { jump: dev });
    }
    for i in 0..raw.len() {
        let m = grid.multi_index(i);
        for a in 0..grid.dim {
            if m[a] + 1 == grid.size {
                let mut q = m.clone();
                q[a] = 0;
                let d = row[grid.flat_index(&q)] - row[i];
                if d.abs() > limit {
                    return Err(Error::PhaseWrapFailure { jump: d.abs() });
                }
            }
        }
    }
    Ok(row)
}

/// Largest normalized `|omega(v_a, v_b)|` over frame pairs: the Lagrangian defect.
pub fn lagrangian_defect(metric: &ToricKahlerPotential, torus: &TransportedTorus) -> Result<f64> {
    let vals: Vec<f64> = torus
        .psi
        .par_iter()
        .zip(torus.frames.par_iter())
        .map(|(z, fr)| -> Result<f64> {
            let h = metric.hermitian(z)?;
            let norms: Vec<f64> = fr.iter().map(|v| (2.0 * hermitian_pair(&h, v, v).re).sqrt()).collect();
            let mut worst: f64 = 0.0;
            for a in 0..fr.len() {
                for b in a + 1..fr.len() {
                    let w = 2.0 * hermitian_pair(&h, &fr[a], &fr[b]).im;
                    worst = worst.max(w.abs() / (norms[a] * norms[b]).max(1e-300));
                }
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}
