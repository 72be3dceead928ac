//! The phase operator `F(h, u)`, its linearization and the frozen-coefficient
//! Fourier preconditioner.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::FamilyChart;
use crate::linalg::{CMat, C64};
use crate::spectral::{derivative_complex, FourierField, Grid};
use crate::toric::metric_hessian;
use crate::transport::{FibreProblem, LagrangianGraph, ReferenceTorus};

/// Mean-removed phase of a transported graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseResidual {
    pub values: Vec<f64>,
    /// Removed mean, reduced to `(-pi, pi]`: the candidate constant phase.
    pub theta1: f64,
}

impl PhaseResidual {
    pub fn from_phase(mut phase: Vec<f64>) -> Self {
        use std::f64::consts::PI;
        let mean = phase.iter().sum::<f64>() / phase.len() as f64;
        phase.iter_mut().for_each(|v| *v -= mean);
        let mut theta1 = mean - 2.0 * PI * (mean / (2.0 * PI)).round();
        if theta1 <= -PI {
            theta1 += 2.0 * PI;
        }
        PhaseResidual { values: phase, theta1 }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// `F(h, u)`: transport, pull back the phase, remove the mean.
pub fn assemble_f(problem: &FibreProblem, graph: &LagrangianGraph, u: f64) -> Result<PhaseResidual> {
    let torus = problem.transport_lagrangian(graph, u)?;
    Ok(PhaseResidual::from_phase(problem.pullback_phase(&torus)?))
}

/// Coefficient fields of `dF = a^{ik} d_i d_k + b^k d_k` on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizationCoefficients {
    pub grid: Grid,
    /// `a[i][k][node]`, symmetric in `i, k`.
    pub a: Vec<Vec<Vec<f64>>>,
    /// `b[k][node]`.
    pub b: Vec<Vec<f64>>,
}

impl LinearizationCoefficients {
    /// `dF . v` with the mean removed.
    pub fn apply(&self, v: &FourierField) -> Vec<f64> {
        let n = self.grid.dim;
        let grad = v.gradient();
        let hess = v.hessian();
        let mut out: Vec<f64> = (0..self.grid.len())
            .map(|p| {
                let mut s = 0.0;
                for i in 0..n {
                    s += self.b[i][p] * grad[i][p];
                    for k in 0..n {
                        s += self.a[i][k][p] * hess[i][k][p];
                    }
                }
                s
            })
            .collect();
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        out.iter_mut().for_each(|x| *x -= mean);
        out
    }

    pub fn sup_a(&self) -> f64 {
        self.a
            .iter()
            .flatten()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Default moment step for the finite-difference derivative of the flow map.
pub fn default_moment_step(reference: &ReferenceTorus) -> f64 {
    let scale = reference.mu0.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-2);
    let mut d = 1e-3 * scale;
    if reference.margin.is_finite() {
        d = d.min(reference.margin / 8.0);
    }
    d
}

/// Linearization of `F` at `(h, u)`.
///
/// With `E(theta, mu)` the flow of the embedded point and `Psi = E(theta,
/// mu0 + grad h)`, a variation `v` moves `Psi` by `E_mu grad v`. Differentiating
/// `log det[e_j, dPsi] - log P_j(Psi)` gives the coefficients; `E_mu` comes
/// from a five-point stencil in `mu` through the same fixed-step flow.
pub fn linearization_coefficients(
    problem: &FibreProblem,
    graph: &LagrangianGraph,
    u: f64,
    delta: Option<f64>,
) -> Result<LinearizationCoefficients> {
    let grid = graph.grid();
    let n = grid.dim;
    let d = n + 1;
    let reference = &graph.reference;
    let delta = delta.unwrap_or_else(|| default_moment_step(reference));
    let torus = problem.transport_lagrangian(graph, u)?;
    let grad = graph.h.gradient();
    let flow = problem.flow();
    let stencil = [(2.0, -1.0 / 12.0), (1.0, 8.0 / 12.0), (-1.0, -8.0 / 12.0), (-2.0, 1.0 / 12.0)];
    // e_mu[p][k] = dE/dmu_k at node p
    let e_mu: Vec<Vec<Vec<C64>>> = (0..grid.len())
        .into_par_iter()
        .map(|p| -> Result<Vec<Vec<C64>>> {
            let theta = grid.theta(p);
            let mu: Vec<f64> = (0..n).map(|a| reference.mu0[a] + grad[a][p]).collect();
            (0..n)
                .map(|k| {
                    let mut acc = vec![C64::new(0.0, 0.0); d];
                    for (s, w) in stencil {
                        let mut m = mu.clone();
                        m[k] += s * delta;
                        let z0 = reference.embed(&theta, &m)?;
                        let (z, _) = flow.integrate(&z0, 0.0, u, &problem.settings)?;
                        for (a, v) in acc.iter_mut().zip(&z) {
                            *a += v * (w / delta);
                        }
                    }
                    Ok(acc)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    // d_i E_mu_k along the graph, spectrally
    let mut de_mu = vec![vec![vec![vec![C64::new(0.0, 0.0); d]; n]; n]; grid.len()];
    for k in 0..n {
        for c in 0..d {
            let vals: Vec<C64> = e_mu.iter().map(|e| e[k][c]).collect();
            for i in 0..n {
                let dv = derivative_complex(grid, &vals, &[i]);
                for (p, v) in dv.into_iter().enumerate() {
                    de_mu[p][i][k][c] = v;
                }
            }
        }
    }
    let chart: &FamilyChart = &problem.chart;
    let per_node: Vec<(Vec<Vec<f64>>, Vec<f64>)> = (0..grid.len())
        .into_par_iter()
        .map(|p| -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
            let z = &torus.psi[p];
            let (_, g) = chart.evaluate_defining(z, torus.t, torus.s);
            let j = FamilyChart::residue_index(&g);
            let mut m = CMat::zeros(d);
            m[(j, 0)] = C64::new(1.0, 0.0);
            for (a, v) in torus.frames[p].iter().enumerate() {
                for r in 0..d {
                    m[(r, a + 1)] = v[r];
                }
            }
            let minv = m.inverse().ok_or(Error::DegenerateFrame)?;
            let row = |i: usize, v: &[C64]| -> C64 { (0..d).map(|c| minv[(i + 1, c)] * v[c]).sum() };
            let hess = chart.defining_hessian(z, torus.t, torus.s);
            let mut a = vec![vec![0.0; n]; n];
            let mut b = vec![0.0; n];
            for k in 0..n {
                for i in 0..n {
                    a[i][k] = row(i, &e_mu[p][k]).im;
                }
                let mut s: C64 = (0..n).map(|i| row(i, &de_mu[p][i][k])).sum();
                let hj: C64 = (0..d).map(|c| hess[(j, c)] * e_mu[p][k][c]).sum();
                s -= hj / g[j];
                b[k] = s.im;
            }
            for i in 0..n {
                for k in i + 1..n {
                    let avg = 0.5 * (a[i][k] + a[k][i]);
                    a[i][k] = avg;
                    a[k][i] = avg;
                }
            }
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    let mut a = vec![vec![vec![0.0; grid.len()]; n]; n];
    let mut b = vec![vec![0.0; grid.len()]; n];
    for (p, (ap, bp)) in per_node.into_iter().enumerate() {
        for i in 0..n {
            b[i][p] = bp[i];
            for k in 0..n {
                a[i][k][p] = ap[i][k];
            }
        }
    }
    Ok(LinearizationCoefficients { grid, a, b })
}

/// Inverse of the frozen operator `-1/2 rho^{jk} d_j d_k` on mean-zero fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatPreconditioner {
    pub grid: Grid,
    /// `rho^{jk}`, row-major.
    pub rho_inv: Vec<f64>,
}

impl FlatPreconditioner {
    pub fn new(grid: Grid, rho_inv: Vec<f64>) -> Self {
        assert_eq!(rho_inv.len(), grid.dim * grid.dim);
        FlatPreconditioner { grid, rho_inv }
    }

    /// Frozen coefficients of the reference potential at its base point.
    pub fn from_reference(reference: &ReferenceTorus, grid: Grid) -> Result<Self> {
        let (_, inv) = metric_hessian(&reference.potential, &reference.x0)?;
        let n = grid.dim;
        Ok(Self::new(grid, (0..n * n).map(|i| inv[(i / n, i % n)]).collect()))
    }

    pub fn id(&self) -> String {
        format!("flat-fourier(n={}, N={})", self.grid.dim, self.grid.size)
    }

    /// `1/2 rho^{jk} m_j m_k`.
    pub fn eigenvalue(&self, m: &[i64]) -> f64 {
        let n = self.grid.dim;
        let mut s = 0.0;
        for j in 0..n {
            for k in 0..n {
                s += self.rho_inv[j * n + k] * (m[j] * m[k]) as f64;
            }
        }
        0.5 * s
    }

    fn active(&self, i: usize) -> bool {
        i != 0 && !self.grid.is_nyquist(&self.grid.multi_index(i))
    }

    /// `C_est = max 1 / lambda(m)` over active modes.
    pub fn c_est(&self) -> f64 {
        self.grid
            .frequencies()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.active(*i))
            .map(|(_, m)| 1.0 / self.eigenvalue(m))
            .fold(0.0, f64::max)
    }

    /// `P r`: divides each active Fourier coefficient by its eigenvalue.
    pub fn apply(&self, values: &[f64]) -> FourierField {
        let mut f = FourierField::from_grid(self.grid, values);
        for (i, m) in self.grid.frequencies().iter().enumerate() {
            if self.active(i) {
                f.coeffs[i] /= self.eigenvalue(m);
            }
        }
        f
    }

    /// The frozen operator itself, `dF(0, 0) h`.
    pub fn forward(&self, h: &FourierField) -> Vec<f64> {
        let mut f = h.clone();
        for (i, m) in self.grid.frequencies().iter().enumerate() {
            if self.active(i) {
                f.coeffs[i] *= self.eigenvalue(m);
            } else {
                f.coeffs[i] = C64::new(0.0, 0.0);
            }
        }
        f.to_grid()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::SparsePoly;
    use crate::toric::ToricKahlerPotential;
    use crate::transport::{FlowSettings, StepMode};

    #[test]
    fn preconditioner_eigenvalue_example() {
        let grid = Grid::new(1, 32);
        let p = FlatPreconditioner::new(grid, vec![4.0]);
        let f = FourierField::from_modes(grid, &[(vec![1], 1.0, 0.0)]);
        let out = p.apply(&f.to_grid()).to_grid();
        for (i, v) in out.iter().enumerate() {
            assert!((v - 0.5 * grid.theta(i)[0].cos()).abs() < 1e-14);
        }
        assert!((p.c_est() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn linearization_at_top_reference_is_flat() {
        let metric = ToricKahlerPotential::fubini_study(2);
        let r = ReferenceTorus::top(&metric, 0, &[0.9]).unwrap();
        let chart = FamilyChart::new(1, SparsePoly::fermat(2, 3)).unwrap();
        let settings = FlowSettings {
            mode: StepMode::Fixed { steps: 8 },
            delta_sing: 0.0,
        };
        let p = FibreProblem::new(chart, metric, r.clone(), settings).unwrap();
        let grid = Grid::new(1, 16);
        let lin = linearization_coefficients(&p, &LagrangianGraph::flat(r.clone(), grid), 0.0, None).unwrap();
        let (_, inv) = metric_hessian(&r.potential, &r.x0).unwrap();
        for q in 0..grid.len() {
            assert!((lin.a[0][0][q] + 0.5 * inv[(0, 0)]).abs() < 1e-9);
            assert!(lin.b[0][q].abs() < 1e-9);
        }
    }

    mod props {
        use super::*;
        use crate::solver::random_field;
        use proptest::prelude::*;
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn preconditioner_inverts_the_flat_operator(
                radii in prop::collection::vec(0.3f64..3.0, 1..=3),
                size in prop::sample::select(vec![8usize, 16]),
                seed: u64,
            ) {
                let n = radii.len();
                let metric = ToricKahlerPotential::fubini_study(n + 1);
                let r = ReferenceTorus::top(&metric, 0, &radii).unwrap();
                let grid = Grid::new(n, size);
                let pre = FlatPreconditioner::from_reference(&r, grid).unwrap();
                let h = random_field(grid, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
                let back = pre.apply(&pre.forward(&h));
                let scale = h.sup_norm();
                let err = back.to_grid().iter().zip(h.to_grid()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                prop_assert!(err <= 1e-12 * scale, "{err:e}");
            }
        }
    }
}
