//! Preconditioned Newton–Kantorovich iteration with sampled contraction
//! bookkeeping.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::norms::{norm_surrogate, NormSurrogate};
use super::operator::{assemble_f, linearization_coefficients, FlatPreconditioner, PhaseResidual};
use crate::error::{Error, Result};
use crate::spectral::{top_third_fraction, FourierField, Grid};
use crate::transport::{FibreProblem, LagrangianGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Residual sup-norm target.
    pub tol: f64,
    pub max_iterations: usize,
    /// Solve each step with the full variable-coefficient linearization.
    pub dense: bool,
    /// Uniqueness radius; sampled around the initial guess when absent.
    pub r0: Option<f64>,
    /// Random graphs probed per radius when sampling `r0`.
    pub r0_samples: usize,
    pub seed: u64,
    /// Largest admissible top-third spectral energy fraction of `h`.
    pub alias_limit: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            max_iterations: 40,
            dense: false,
            r0: None,
            r0_samples: 2,
            seed: 7,
            alias_limit: 0.01,
        }
    }
}

/// Certificates of a Newton solve. All constants are sampled estimates
/// (`heuristic = true`), measured in grid surrogate norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub c_est: f64,
    /// Largest distance of an iterate from the initial guess.
    pub r: f64,
    pub r0: f64,
    /// Parameter value reached.
    pub u0: f64,
    pub residual_history: Vec<f64>,
    pub newton_iterations: usize,
    pub preconditioner_id: String,
    pub lipschitz: f64,
    pub theta1: f64,
    pub norms: NormSurrogate,
    pub nu: f64,
    pub heuristic: bool,
}

fn ball_norm(h: &FourierField) -> f64 {
    norm_surrogate(h, 1.0).c2_norm()
}

/// Random smooth mean-zero field with low modes, scaled to ball norm `r`.
pub fn random_field(grid: Grid, r: f64, rng: &mut ChaCha8Rng) -> FourierField {
    let mut modes = Vec::new();
    let n = grid.dim;
    let kmax = 3i64.min(grid.size as i64 / 4);
    let side = 2 * kmax + 1;
    for idx in 0..side.pow(n as u32) {
        let mut m = Vec::with_capacity(n);
        let mut q = idx;
        for _ in 0..n {
            m.push(q % side - kmax);
            q /= side;
        }
        if m.iter().all(|&v| v == 0) {
            continue;
        }
        let size = m.iter().map(|v| v * v).sum::<i64>() as f64;
        modes.push((m, rng.gen_range(-1.0..1.0) / (1.0 + size), rng.gen_range(0.0..std::f64::consts::TAU)));
    }
    let f = FourierField::from_modes(grid, &modes);
    let nrm = ball_norm(&f);
    f.scaled(r / nrm)
}

fn residual_at(problem: &FibreProblem, reference: &LagrangianGraph, h: &FourierField, u: f64) -> Result<PhaseResidual> {
    let graph = LagrangianGraph {
        reference: reference.reference.clone(),
        h: h.clone(),
    };
    graph.validate()?;
    assemble_f(problem, &graph, u)
}

/// Sampled contraction factor `sup_v |v - P dF(h) v| / |v|` at `h`.
fn contraction_factor(
    problem: &FibreProblem,
    base: &LagrangianGraph,
    h: &FourierField,
    u: f64,
    precond: &FlatPreconditioner,
    rng: &mut ChaCha8Rng,
    dirs: usize,
) -> Result<f64> {
    let eps = 1e-5;
    let mut q: f64 = 0.0;
    for _ in 0..dirs {
        let v = random_field(h.grid, 1.0, rng);
        let fp = residual_at(problem, base, &h.axpy(eps, &v), u)?;
        let fm = residual_at(problem, base, &h.axpy(-eps, &v), u)?;
        let dv: Vec<f64> = fp.values.iter().zip(&fm.values).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let w = precond.apply(&dv);
        q = q.max(ball_norm(&v.axpy(-1.0, &w)));
    }
    Ok(q)
}

/// Largest radius `r0` (halving from a margin-derived start) such that the
/// sampled contraction factor stays below `1/2` on random graphs in the ball.
pub fn estimate_r0(
    problem: &FibreProblem,
    center: &LagrangianGraph,
    u: f64,
    precond: &FlatPreconditioner,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grad_max = center
        .h
        .gradient()
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let margin = center.reference.margin;
    let mut r = if margin.is_finite() {
        0.5 * (margin - grad_max).max(0.0)
    } else {
        0.5
    };
    let mut last = r;
    for _ in 0..8 {
        let mut ok = true;
        for _ in 0..samples.max(1) {
            let h = center.h.axpy(1.0, &random_field(center.grid(), r, &mut rng));
            match contraction_factor(problem, center, &h, u, precond, &mut rng, 2) {
                Ok(q) if q <= 0.5 => {}
                Ok(_) => ok = false,
                Err(e) if e.is_numerical() => ok = false,
                Err(e) => return Err(e),
            }
            if !ok {
                break;
            }
        }
        if ok {
            return Ok(r);
        }
        last = r;
        r *= 0.5;
    }
    log::warn!("contraction not verified down to radius {last:.3e}");
    Ok(0.5 * last)
}

/// Real Fourier basis of mean-zero, non-Nyquist fields (cos and sin per
/// frequency pair).
pub fn real_basis(grid: Grid) -> Vec<FourierField> {
    let mut out = Vec::new();
    for (i, m) in grid.frequencies().iter().enumerate() {
        if i == 0 || grid.is_nyquist(&grid.multi_index(i)) {
            continue;
        }
        let first = m.iter().find(|&&v| v != 0).copied().unwrap_or(0);
        if first < 0 {
            continue;
        }
        out.push(FourierField::from_modes(grid, &[(m.clone(), 1.0, 0.0)]));
        out.push(FourierField::from_modes(grid, &[(m.clone(), 1.0, -std::f64::consts::FRAC_PI_2)]));
    }
    out
}

/// Largest basis size accepted by the dense switch.
pub const DENSE_LIMIT: usize = 2048;

fn dense_step(
    problem: &FibreProblem,
    graph: &LagrangianGraph,
    u: f64,
    residual: &[f64],
) -> Result<FourierField> {
    let grid = graph.grid();
    let basis = real_basis(grid);
    if basis.len() > DENSE_LIMIT {
        return Err(Error::config("solver.dense", format!("{} unknowns exceed the dense limit", basis.len())));
    }
    let lin = linearization_coefficients(problem, graph, u, None)?;
    let cols: Vec<Vec<f64>> = basis.iter().map(|b| lin.apply(b)).collect();
    let a = DMatrix::from_fn(grid.len(), basis.len(), |r, c| cols[c][r]);
    let rhs = DVector::from_iterator(grid.len(), residual.iter().map(|v| -v));
    let svd = a.svd(true, true);
    let x = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Invariant(format!("dense solve failed: {e}")))?;
    let mut step = FourierField::zeros(grid);
    for (c, b) in basis.iter().enumerate() {
        step = step.axpy(x[c], b);
    }
    Ok(step)
}

/// Solves `F(h, u) = 0` (mean-removed) from `initial`.
pub fn newton_solve(
    problem: &FibreProblem,
    initial: &LagrangianGraph,
    u: f64,
    opts: &SolverOptions,
) -> Result<(FourierField, SolverReport)> {
    if !(opts.tol > 0.0) {
        return Err(Error::config("solver.tol", "must be positive"));
    }
    let grid = initial.grid();
    let precond = FlatPreconditioner::from_reference(&initial.reference, grid)?;
    let r0 = match opts.r0 {
        Some(r) => r,
        None => estimate_r0(problem, initial, u, &precond, opts.r0_samples, opts.seed)?,
    };
    let h0 = initial.h.clone();
    let mut h = h0.clone();
    let mut res = residual_at(problem, initial, &h, u)?;
    let mut history = vec![res.sup_norm()];
    let mut increases = 0;
    let mut r: f64 = 0.0;
    let mut lipschitz: f64 = 0.0;
    let mut iterations = 0;
    while res.sup_norm() > opts.tol {
        if iterations >= opts.max_iterations {
            return Err(Error::Diverged {
                iterations,
                residual: res.sup_norm(),
            });
        }
        let graph = LagrangianGraph {
            reference: initial.reference.clone(),
            h: h.clone(),
        };
        let step = if opts.dense {
            dense_step(problem, &graph, u, &res.values)?
        } else {
            precond.apply(&res.values).scaled(-1.0)
        };
        let next = h.axpy(1.0, &step);
        let dist = ball_norm(&next.axpy(-1.0, &h0));
        if dist > r0 {
            return Err(Error::OutOfBall { distance: dist, r0 });
        }
        let new_res = residual_at(problem, initial, &next, u)?;
        let snorm = ball_norm(&step);
        if snorm > 0.0 {
            lipschitz = lipschitz.max(2.0 * new_res.sup_norm() / (snorm * snorm));
        }
        if new_res.sup_norm() > res.sup_norm() {
            increases += 1;
            if increases >= 2 {
                return Err(Error::Diverged {
                    iterations: iterations + 1,
                    residual: new_res.sup_norm(),
                });
            }
        } else {
            increases = 0;
        }
        r = r.max(dist);
        h = next;
        res = new_res;
        history.push(res.sup_norm());
        iterations += 1;
    }
    let frac = top_third_fraction(grid, &h.coeffs);
    if frac > opts.alias_limit {
        return Err(Error::AliasedFrame { fraction: frac });
    }
    let nu = initial
        .reference
        .radii()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let report = SolverReport {
        c_est: precond.c_est(),
        r,
        r0,
        u0: u,
        residual_history: history,
        newton_iterations: iterations,
        preconditioner_id: if opts.dense {
            "dense-collocation".into()
        } else {
            precond.id()
        },
        lipschitz,
        theta1: res.theta1,
        norms: norm_surrogate(&h, nu),
        nu,
        heuristic: true,
    };
    Ok((h, report))
}
