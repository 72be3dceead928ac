//! Continuation in the active parameter with a linear-growth step guard.

use serde::{Deserialize, Serialize};

use super::newton::{estimate_r0, newton_solve, SolverOptions, SolverReport};
use super::norms::norm_surrogate;
use super::operator::FlatPreconditioner;
use crate::error::{Error, Result};
use crate::spectral::FourierField;
use crate::transport::{FibreProblem, LagrangianGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationPolicy {
    /// First trial step is `u_max / initial_steps`.
    pub initial_steps: usize,
    /// Accept a step only if `|h(u) - h(u_prev)|_{C^1} <= k_guard * du`.
    pub k_guard: f64,
    /// Give up once `du < min_fraction * u_max`.
    pub min_fraction: f64,
    /// Adaptive tolerance of the pilot run that fixes the step count.
    pub pilot_tol: f64,
    pub max_steps: usize,
}

impl Default for ContinuationPolicy {
    fn default() -> Self {
        ContinuationPolicy {
            initial_steps: 2,
            k_guard: 10.0,
            min_fraction: 1e-6,
            pilot_tol: 1e-10,
            max_steps: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStep {
    pub u: f64,
    pub h: FourierField,
    pub report: SolverReport,
}

fn retryable(e: &Error) -> bool {
    matches!(
        e,
        Error::Diverged { .. }
            | Error::OutOfBall { .. }
            | Error::PhaseWrapFailure { .. }
            | Error::SingularApproach { .. }
            | Error::StepUnderflow { .. }
            | Error::NoContraction { .. }
            | Error::OutsideMomentImage { .. }
    )
}

/// Path of solved graphs from `u = 0` to `u_max`, each step seeded by the
/// previous solution. On an aliased frame the grid is refined once.
pub fn continuation(
    problem: &FibreProblem,
    start: &LagrangianGraph,
    u_max: f64,
    opts: &SolverOptions,
    policy: &ContinuationPolicy,
) -> Result<Vec<ContinuationStep>> {
    let mut graph = start.clone();
    let r0 = match opts.r0 {
        Some(r) => r,
        None => {
            let pc = FlatPreconditioner::from_reference(&graph.reference, graph.grid())?;
            estimate_r0(problem, &graph, 0.0, &pc, opts.r0_samples, opts.seed)?
        }
    };
    let opts = SolverOptions { r0: Some(r0), ..*opts };
    let (h, report) = newton_solve(problem, &graph, 0.0, &opts)?;
    graph.h = h.clone();
    let mut path = vec![ContinuationStep { u: 0.0, h, report }];
    if u_max == 0.0 {
        return Ok(path);
    }
    let mut u = 0.0;
    let mut du = u_max / policy.initial_steps.max(1) as f64;
    let mut refined = false;
    let mut steps = 0;
    while u < u_max {
        if du < policy.min_fraction * u_max || steps >= policy.max_steps {
            return Err(Error::StallAtU { frontier: u, target: u_max });
        }
        steps += 1;
        let trial = (u + du).min(u_max);
        let attempt = problem
            .with_fixed_steps(graph.grid(), trial, policy.pilot_tol)
            .and_then(|p| newton_solve(&p, &graph, trial, &opts));
        match attempt {
            Ok((h, report)) => {
                let growth = norm_surrogate(&h.axpy(-1.0, &graph.h), 1.0).c1_norm();
                if growth > policy.k_guard * (trial - u) {
                    log::debug!("step to u={trial:.3e} rejected: growth {growth:.3e}");
                    du *= 0.5;
                    continue;
                }
                u = trial;
                graph.h = h.clone();
                path.push(ContinuationStep { u, h, report });
                du *= 1.5;
            }
            Err(Error::AliasedFrame { fraction }) if !refined => {
                log::info!("aliased frame ({fraction:.2e}); refining grid");
                refined = true;
                let fine = graph.grid().refined();
                graph.h = graph.h.resample(fine);
            }
            Err(e) if retryable(&e) => {
                log::debug!("step to u={trial:.3e} failed: {e}");
                du *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(path)
}
