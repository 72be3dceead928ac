//! Reference tori, Lagrangian graphs over them, and the transport problem.

use serde::{Deserialize, Serialize};

use super::integrator::{FlowPath, FlowSettings};
use crate::error::{Error, Result};
use crate::family::{FamilyChart, Param};
use crate::linalg::C64;
use crate::spectral::{FourierField, Grid};
use crate::toric::{inverse_moment_map, moment_map, Constraint, ToricKahlerPotential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    /// `{z_g = 0, |z_k| = r_k}` in the central fibre `X_0`.
    Top,
    /// A torus of the local model `prod z = -t`.
    Vertex,
}

/// Toric reference torus in action-angle coordinates `(theta, mu)` on the
/// `n` non-graph chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTorus {
    pub kind: ReferenceKind,
    pub n: usize,
    /// Chart coordinate solved for (vanishing on top references).
    pub graph_index: usize,
    pub potential: ToricKahlerPotential,
    pub mu0: Vec<f64>,
    pub x0: Vec<f64>,
    /// Chart-level deformation parameter of the reference (zero for top).
    pub t: f64,
    /// Bound on `max |grad h|` keeping graphs inside the moment image.
    pub margin: f64,
}

impl ReferenceTorus {
    /// Top reference `{z_g = 0, |w_k| = r_k}` with the limit of `metric`.
    pub fn top(metric: &ToricKahlerPotential, g: usize, radii: &[f64]) -> Result<Self> {
        let potential = metric.induce(g, Constraint::Limit)?;
        Self::build(ReferenceKind::Top, potential, g, radii, 0.0)
    }

    /// Vertex reference on `prod z = -t` with non-graph radii `r_k`.
    pub fn vertex(metric: &ToricKahlerPotential, g: usize, t: f64, radii: &[f64]) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::config("t", "vertex references need t > 0"));
        }
        let potential = metric.induce(g, Constraint::Product { c: (t * t).ln() })?;
        Self::build(ReferenceKind::Vertex, potential, g, radii, t)
    }

    /// Reference with an explicitly supplied torus potential.
    pub fn with_potential(
        kind: ReferenceKind,
        potential: ToricKahlerPotential,
        g: usize,
        radii: &[f64],
        t: f64,
    ) -> Result<Self> {
        Self::build(kind, potential, g, radii, t)
    }

    fn build(kind: ReferenceKind, potential: ToricKahlerPotential, g: usize, radii: &[f64], t: f64) -> Result<Self> {
        let n = radii.len();
        if potential.dim() != n || g > n {
            return Err(Error::config("radii", "dimension mismatch with the reference potential"));
        }
        if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::config("radii", "must be positive"));
        }
        let x0: Vec<f64> = radii.iter().map(|r| 2.0 * r.ln()).collect();
        let mu0 = moment_map(&potential, &x0);
        let margin = match &potential {
            ToricKahlerPotential::FubiniStudy { .. } => {
                let s: f64 = mu0.iter().sum();
                0.5 * mu0.iter().copied().fold(1.0 - s, f64::min)
            }
            _ => f64::INFINITY,
        };
        Ok(ReferenceTorus {
            kind,
            n,
            graph_index: g,
            potential,
            mu0,
            x0,
            t,
            margin,
        })
    }

    pub fn radii(&self) -> Vec<f64> {
        self.x0.iter().map(|x| (0.5 * x).exp()).collect()
    }

    /// Inserts the graph coordinate into the non-graph coordinates `w`.
    pub fn complete(&self, w: &[C64]) -> Vec<C64> {
        let zg = match self.kind {
            ReferenceKind::Top => C64::new(0.0, 0.0),
            ReferenceKind::Vertex => -self.t / w.iter().product::<C64>(),
        };
        let mut z = Vec::with_capacity(self.n + 1);
        z.extend_from_slice(&w[..self.graph_index]);
        z.push(zg);
        z.extend_from_slice(&w[self.graph_index..]);
        z
    }

    /// Point of the reference manifold with angles `theta` and moment `mu`.
    pub fn embed(&self, theta: &[f64], mu: &[f64]) -> Result<Vec<C64>> {
        let x = inverse_moment_map(&self.potential, mu, Some(&self.x0))?;
        let w: Vec<C64> = x
            .iter()
            .zip(theta)
            .map(|(x, th)| C64::from_polar((0.5 * x).exp(), *th))
            .collect();
        Ok(self.complete(&w))
    }

    /// The parameter path starting at this reference.
    pub fn path(&self) -> FlowPath {
        match self.kind {
            ReferenceKind::Top => FlowPath { param: Param::T, fixed: 1.0 },
            ReferenceKind::Vertex => FlowPath { param: Param::S, fixed: self.t },
        }
    }
}

/// Graph of `dh` over a reference torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianGraph {
    pub reference: ReferenceTorus,
    pub h: FourierField,
}

impl LagrangianGraph {
    pub fn new(reference: ReferenceTorus, h: FourierField) -> Result<Self> {
        let g = LagrangianGraph { reference, h };
        g.validate()?;
        Ok(g)
    }

    pub fn flat(reference: ReferenceTorus, grid: Grid) -> Self {
        LagrangianGraph {
            reference,
            h: FourierField::zeros(grid),
        }
    }

    pub fn grid(&self) -> Grid {
        self.h.grid
    }

    pub fn validate(&self) -> Result<()> {
        if self.h.grid.dim != self.reference.n {
            return Err(Error::config("grid", "dimension differs from the reference torus"));
        }
        if self.h.mean().abs() > 1e-14 {
            return Err(Error::Invariant(format!("graph potential has mean {}", self.h.mean())));
        }
        let grad = self.h.gradient();
        let max = grad
            .iter()
            .flat_map(|g| g.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()));
        if max >= self.reference.margin {
            return Err(Error::OutsideMomentImage { mu: self.reference.mu0.clone() });
        }
        Ok(())
    }

    /// Start points `embed(theta, mu0 + grad h(theta))` on the grid.
    pub fn start_points(&self) -> Result<Vec<Vec<C64>>> {
        let grid = self.grid();
        let grad = self.h.gradient();
        (0..grid.len())
            .map(|i| {
                let mu: Vec<f64> = (0..grid.dim)
                    .map(|a| self.reference.mu0[a] + grad[a][i])
                    .collect();
                self.reference.embed(&grid.theta(i), &mu)
            })
            .collect()
    }
}

/// A reference torus together with the chart, ambient metric and flow
/// settings used to transport graphs over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FibreProblem {
    pub chart: FamilyChart,
    pub metric: ToricKahlerPotential,
    pub reference: ReferenceTorus,
    pub settings: FlowSettings,
}

impl FibreProblem {
    pub fn new(
        chart: FamilyChart,
        metric: ToricKahlerPotential,
        reference: ReferenceTorus,
        settings: FlowSettings,
    ) -> Result<Self> {
        if chart.dim() != metric.dim() || reference.n != chart.n {
            return Err(Error::config("metric", "dimension mismatch between chart, metric and reference"));
        }
        Ok(FibreProblem {
            chart,
            metric,
            reference,
            settings,
        })
    }

    pub fn path(&self) -> FlowPath {
        self.reference.path()
    }

    /// `(t, s)` reached at parameter value `u`.
    pub fn state(&self, u: f64) -> (f64, f64) {
        self.path().state(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_reference_lies_on_local_model() {
        let m = ToricKahlerPotential::euclidean(3);
        let r = ReferenceTorus::vertex(&m, 1, 1e-3, &[0.3, 0.5]).unwrap();
        let z = r.embed(&[0.2, 1.3], &r.mu0).unwrap();
        let prod: C64 = z.iter().product();
        assert!((prod + 1e-3).norm() < 1e-15);
        assert!((z[0].norm() - 0.3).abs() < 1e-12 && (z[2].norm() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn top_reference_has_vanishing_graph_coordinate() {
        let m = ToricKahlerPotential::fubini_study(2);
        let r = ReferenceTorus::top(&m, 0, &[0.8]).unwrap();
        let z = r.embed(&[0.4], &r.mu0).unwrap();
        assert_eq!(z[0], C64::new(0.0, 0.0));
        assert!((z[1].norm() - 0.8).abs() < 1e-12);
        assert!(r.margin > 0.0 && r.margin.is_finite());
    }

    #[test]
    fn flat_metric_has_no_top_limit() {
        let m = ToricKahlerPotential::flat(2);
        assert!(matches!(
            ReferenceTorus::top(&m, 0, &[1.0]),
            Err(Error::LimitUndefined { .. })
        ));
    }

    #[test]
    fn graph_rejects_large_gradient() {
        let m = ToricKahlerPotential::fubini_study(2);
        let r = ReferenceTorus::top(&m, 0, &[1.0]).unwrap();
        let grid = Grid::new(1, 16);
        let h = FourierField::from_modes(grid, &[(vec![1], 0.5, 0.0)]);
        assert!(LagrangianGraph::new(r, h).is_err());
    }
}
