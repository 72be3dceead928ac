//! Moment maps, their inverses, and the local-model base projection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::potential::ToricKahlerPotential;
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Action-angle description of a point of a toric manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentFrame {
    pub theta: Vec<f64>,
    pub rho: Vec<f64>,
    pub x: Vec<f64>,
}

impl MomentFrame {
    pub fn from_x(potential: &ToricKahlerPotential, theta: Vec<f64>, x: Vec<f64>) -> Self {
        let rho = moment_map(potential, &x);
        MomentFrame { theta, rho, x }
    }

    /// Complex coordinates `z_k = exp(x_k / 2 + i theta_k)`.
    pub fn point(&self) -> Vec<C64> {
        self.x
            .iter()
            .zip(&self.theta)
            .map(|(x, th)| C64::from_polar((0.5 * x).exp(), *th))
            .collect()
    }
}

pub fn moment_map(potential: &ToricKahlerPotential, x: &[f64]) -> Vec<f64> {
    potential.gradient(x)
}

/// Hessian `rho_jk` and its inverse `rho^jk`.
pub fn metric_hessian(
    potential: &ToricKahlerPotential,
    x: &[f64],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let h = potential.hessian(x);
    let chol = h
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NonPositiveDefinite { x: x.to_vec() })?;
    Ok((h, chol.inverse()))
}

/// Solves `grad rho(x) = mu` by damped Newton on the convex function
/// `rho(x) - mu . x`, seeded at `guess` (or a closed form where known).
pub fn inverse_moment_map(
    potential: &ToricKahlerPotential,
    mu: &[f64],
    guess: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let outside = || Error::OutsideMomentImage { mu: mu.to_vec() };
    match potential {
        ToricKahlerPotential::Quadratic { dim, a } => {
            let m = DMatrix::from_row_slice(*dim, *dim, a);
            let x = m
                .cholesky()
                .ok_or_else(outside)?
                .solve(&DVector::from_column_slice(mu));
            return Ok(x.as_slice().to_vec());
        }
        ToricKahlerPotential::FubiniStudy { .. } => {
            let rest = 1.0 - mu.iter().sum::<f64>();
            if rest <= 0.0 || mu.iter().any(|&m| m <= 0.0) {
                return Err(outside());
            }
            return Ok(mu.iter().map(|m| (m / rest).ln()).collect());
        }
        _ => {}
    }
    let dim = potential.dim();
    let mut x: Vec<f64> = match guess {
        Some(g) => g.to_vec(),
        None => vec![0.0; dim],
    };
    let phi = |x: &[f64]| potential.value(x) - mu.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    let scale = 1.0 + mu.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for _ in 0..200 {
        let g: Vec<f64> = potential
            .gradient(&x)
            .iter()
            .zip(mu)
            .map(|(a, b)| a - b)
            .collect();
        let gn = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if gn <= 1e-15 * scale {
            return Ok(x);
        }
        let h = potential.hessian(&x);
        let step = h
            .cholesky()
            .ok_or_else(|| Error::NonPositiveDefinite { x: x.clone() })?
            .solve(&DVector::from_column_slice(&g));
        let f0 = phi(&x);
        let slope: f64 = -g.iter().zip(step.iter()).map(|(a, b)| a * b).sum::<f64>();
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a - alpha * b).collect();
            let ft = phi(&trial);
            if ft.is_finite() && ft <= f0 + 1e-4 * alpha * slope + 1e-15 * f0.abs().max(1.0) {
                x = trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // line search stalls at round-off; accept if the gradient is already tiny
            if gn <= 1e-11 * scale {
                return Ok(x);
            }
            return Err(outside());
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > 700.0) {
            return Err(outside());
        }
    }
    Err(outside())
}

/// Base coordinates `|z_k|^2 - min_i |z_i|^2` of a point of `prod z = -t`.
pub fn base_projection(z: &[C64], t: f64) -> Result<Vec<f64>> {
    let prod: f64 = z.iter().map(|v| v.norm()).product();
    let defect = (prod - t.abs()).abs() / t.abs().max(f64::MIN_POSITIVE);
    if !(defect <= 1e-8) {
        return Err(Error::OffHypersurface { defect });
    }
    let r2: Vec<f64> = z.iter().map(|v| v.norm_sqr()).collect();
    let m = r2.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(r2.iter().map(|v| v - m).collect())
}
