//! Solving top-face and vertex fibres over base points, with an independent
//! end-check of every record.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::region::{t_hat, BasePoint, RegionConstants};
use crate::error::{Error, Result};
use crate::family::GlobalFamily;
use crate::solver::{continuation, ContinuationPolicy, PhaseResidual, SolverOptions, SolverReport};
use crate::spectral::{FourierField, Grid};
use crate::toric::ToricKahlerPotential;
use crate::transport::{
    default_delta_sing, lagrangian_defect, FibreProblem, FlowSettings, LagrangianGraph, ReferenceTorus, StepMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FibreKind {
    Top,
    Vertex,
}

/// Ambient Kähler potential used in every vertex chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricChoice {
    FubiniStudy,
    Euclidean,
}

impl MetricChoice {
    pub fn potential(&self, dim: usize) -> ToricKahlerPotential {
        match self {
            MetricChoice::FubiniStudy => ToricKahlerPotential::fubini_study(dim),
            MetricChoice::Euclidean => ToricKahlerPotential::euclidean(dim),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtlasConfig {
    /// Points per circle; the spectral default for the fibre dimension when absent.
    pub grid_size: Option<usize>,
    pub regions: RegionConstants,
    pub metric: MetricChoice,
    /// Adaptive tolerance of flows (pilot runs and adaptive transport).
    pub flow_tol: f64,
    /// Tolerance of the independent re-transport in the end-check.
    pub end_check_tol: f64,
    /// Excluded radius around `Sing(X_0)`; `t^{1/(n+1)} / 4` when absent.
    pub delta_sing: Option<f64>,
    /// Largest admissible `t_hat` for top fibres.
    pub t_hat_max: f64,
    pub solver: SolverOptions,
    pub policy: ContinuationPolicy,
}

impl Default for AtlasConfig {
    fn default() -> Self {
        AtlasConfig {
            grid_size: None,
            regions: RegionConstants::default(),
            metric: MetricChoice::FubiniStudy,
            flow_tol: 1e-10,
            end_check_tol: 1e-12,
            delta_sing: None,
            t_hat_max: 0.25,
            solver: SolverOptions::default(),
            policy: ContinuationPolicy::default(),
        }
    }
}

/// Default points per circle: 128, 64, 16 for fibre dimension 1, 2, 3.
pub fn default_grid_size(n: usize) -> usize {
    match n {
        1 => 128,
        2 => 64,
        _ => 16,
    }
}

impl AtlasConfig {
    pub fn grid(&self, n: usize) -> Grid {
        Grid::new(n, self.grid_size.unwrap_or_else(|| default_grid_size(n)))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, f: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(f, "must be positive"))
            }
        };
        positive(self.solver.tol, "solver.tol")?;
        positive(self.flow_tol, "flow_tol")?;
        positive(self.end_check_tol, "end_check_tol")?;
        positive(self.regions.c_v, "regions.c_v")?;
        positive(self.policy.k_guard, "policy.k_guard")?;
        positive(self.t_hat_max, "t_hat_max")?;
        if let Some(c) = self.regions.c_f {
            positive(c, "regions.c_f")?;
        }
        if let Some(n) = self.grid_size {
            if n < 4 || !n.is_power_of_two() {
                return Err(Error::config("grid_size", "must be a power of two, at least 4"));
            }
        }
        Ok(())
    }
}

/// Independent verification of a solved fibre by adaptive re-transport.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndCheck {
    pub phase_deviation: f64,
    pub lagrangian_defect: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FibreRecord {
    pub base: BasePoint,
    pub kind: FibreKind,
    pub chart_id: usize,
    pub h: FourierField,
    pub theta1: f64,
    pub residual: f64,
    pub report: SolverReport,
    pub nu: f64,
    pub t_hat: f64,
    pub t: f64,
    pub s: f64,
    pub end_check: EndCheck,
}

/// The transport problem of a fibre over `base` at global parameter `t`.
pub fn fibre_problem(
    family: &GlobalFamily,
    base: &BasePoint,
    kind: FibreKind,
    t: f64,
    cfg: &AtlasConfig,
) -> Result<(FibreProblem, f64)> {
    let chart = family.chart(base.chart)?;
    let n = chart.n;
    let metric = cfg.metric.potential(n + 1);
    let t_chart = t * chart.t_scale;
    let (reference, u_max) = match kind {
        FibreKind::Top => (ReferenceTorus::top(&metric, base.graph_index, &base.radii)?, t_chart),
        FibreKind::Vertex => (
            ReferenceTorus::vertex(&metric, base.graph_index, t_chart, &base.radii)?,
            1.0,
        ),
    };
    let settings = FlowSettings {
        mode: StepMode::Adaptive { tol: cfg.flow_tol },
        delta_sing: cfg.delta_sing.unwrap_or_else(|| default_delta_sing(t_chart, n)),
    };
    Ok((FibreProblem::new(chart, metric, reference, settings)?, u_max))
}

/// Adaptive re-transport at `cfg.end_check_tol`: phase constancy and the
/// Lagrangian condition, without reusing the solver's fixed-step flows.
pub fn end_check(problem: &FibreProblem, graph: &LagrangianGraph, u: f64, cfg: &AtlasConfig) -> Result<EndCheck> {
    let mut p = problem.clone();
    p.settings.mode = StepMode::Adaptive { tol: cfg.end_check_tol };
    let torus = p.transport_lagrangian(graph, u)?;
    let phase = PhaseResidual::from_phase(p.pullback_phase(&torus)?);
    let dev = phase.sup_norm();
    let lag = lagrangian_defect(&p.metric, &torus)?;
    Ok(EndCheck {
        phase_deviation: dev,
        lagrangian_defect: lag,
        passed: dev <= 10.0 * cfg.solver.tol && lag <= 1e-8,
    })
}

/// Solves the fibre over one base point. `t = 0` returns the reference torus.
pub fn solve_fibre(
    family: &GlobalFamily,
    base: &BasePoint,
    kind: FibreKind,
    t: f64,
    cfg: &AtlasConfig,
) -> Result<FibreRecord> {
    cfg.validate()?;
    if kind == FibreKind::Vertex && !(t > 0.0) {
        return Err(Error::config("t", "vertex fibres need t > 0"));
    }
    let (problem, u_max) = fibre_problem(family, base, kind, t, cfg)?;
    let n = problem.chart.n;
    let nu = match kind {
        FibreKind::Top => base.nu_top(),
        FibreKind::Vertex => base.nu_vertex(),
    };
    let th = t_hat(t, nu, n);
    if kind == FibreKind::Top && th > cfg.t_hat_max {
        return Err(Error::config("base", format!("t_hat = {th:.3e} exceeds t_hat_max for a top fibre")));
    }
    let start = LagrangianGraph::flat(problem.reference.clone(), cfg.grid(n));
    let path = continuation(&problem, &start, u_max, &cfg.solver, &cfg.policy)?;
    let last = path.last().expect("continuation returns the start");
    let graph = LagrangianGraph {
        reference: problem.reference.clone(),
        h: last.h.clone(),
    };
    let check = end_check(&problem, &graph, last.u, cfg)?;
    let (_, s) = problem.state(last.u);
    let mut report = last.report.clone();
    report.nu = nu;
    report.norms = crate::solver::norm_surrogate(&last.h, nu);
    Ok(FibreRecord {
        base: base.clone(),
        kind,
        chart_id: base.chart,
        h: last.h.clone(),
        theta1: report.theta1,
        residual: *report.residual_history.last().unwrap_or(&0.0),
        report,
        nu,
        t_hat: th,
        t,
        s,
        end_check: check,
    })
}

fn build(
    family: &GlobalFamily,
    bases: &[BasePoint],
    kind: FibreKind,
    t: f64,
    cfg: &AtlasConfig,
) -> Vec<(BasePoint, Result<FibreRecord>)> {
    bases
        .par_iter()
        .map(|b| (b.clone(), solve_fibre(family, b, kind, t, cfg)))
        .collect()
}

/// Top fibres over base points tagged top or overlap, in input order.
pub fn build_top_fibration(
    family: &GlobalFamily,
    bases: &[BasePoint],
    t: f64,
    cfg: &AtlasConfig,
) -> Vec<(BasePoint, Result<FibreRecord>)> {
    let eligible: Vec<BasePoint> = bases.iter().filter(|b| b.region.allows_top()).cloned().collect();
    build(family, &eligible, FibreKind::Top, t, cfg)
}

/// Vertex fibres over base points tagged ver or overlap, in input order.
pub fn build_vertex_fibration(
    family: &GlobalFamily,
    bases: &[BasePoint],
    t: f64,
    cfg: &AtlasConfig,
) -> Vec<(BasePoint, Result<FibreRecord>)> {
    let eligible: Vec<BasePoint> = bases.iter().filter(|b| b.region.allows_vertex()).cloned().collect();
    build(family, &eligible, FibreKind::Vertex, t, cfg)
}

/// Transported torus of a record, re-flowed adaptively.
pub fn record_torus(
    family: &GlobalFamily,
    record: &FibreRecord,
    cfg: &AtlasConfig,
) -> Result<(FibreProblem, crate::transport::TransportedTorus)> {
    let (mut problem, u_max) = fibre_problem(family, &record.base, record.kind, record.t, cfg)?;
    problem.settings.mode = StepMode::Adaptive { tol: cfg.end_check_tol };
    let graph = LagrangianGraph {
        reference: problem.reference.clone(),
        h: record.h.clone(),
    };
    let torus = problem.transport_lagrangian(&graph, u_max)?;
    Ok((problem, torus))
}
