//! Grid surrogates for Hölder norms and the phase decomposition diagnostic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::FamilyChart;
use crate::spectral::FourierField;
use crate::toric::ToricKahlerPotential;
use crate::transport::{form_values, unwrap_phase, TransportedTorus};

/// Hölder exponent of the surrogate difference quotient.
pub const HOLDER_ALPHA: f64 = 0.5;

/// Grid-max derivative norms of `h`, lengths rescaled by `1/nu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSurrogate {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub holder: f64,
    pub nu: f64,
}

impl NormSurrogate {
    /// `C^1` surrogate `max(c0, c1)`.
    pub fn c1_norm(&self) -> f64 {
        self.c0.max(self.c1)
    }

    /// `C^2` surrogate `max(c0, c1, c2)`, the ball norm of the solver.
    pub fn c2_norm(&self) -> f64 {
        self.c1_norm().max(self.c2)
    }
}

pub fn norm_surrogate(h: &FourierField, nu: f64) -> NormSurrogate {
    let grid = h.grid;
    let n = grid.dim;
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let c0 = sup(&h.to_grid());
    let c1 = h.gradient().iter().map(|g| sup(g)).fold(0.0, f64::max);
    let hess = h.hessian();
    let c2 = hess.iter().flatten().map(|g| sup(g)).fold(0.0, f64::max);
    let step = grid.spacing().powf(HOLDER_ALPHA);
    let mut holder: f64 = 0.0;
    for p in 0..grid.len() {
        let m = grid.multi_index(p);
        for a in 0..n {
            let mut q = m.clone();
            q[a] = (q[a] + 1) % grid.size;
            let qi = grid.flat_index(&q);
            for row in &hess {
                for f in row {
                    holder = holder.max((f[p] - f[qi]).abs() / step);
                }
            }
        }
    }
    NormSurrogate {
        c0,
        c1: nu * c1,
        c2: nu * nu * c2,
        holder: nu.powf(2.0 + HOLDER_ALPHA) * holder,
        nu,
    }
}

/// `theta1` (continuous phase) and `theta2 = -1/2 log(|Omega(v)|^2 / det g(v, v))`.
pub fn phase_decomposition(
    chart: &FamilyChart,
    metric: &ToricKahlerPotential,
    torus: &TransportedTorus,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let vals = form_values(chart, torus)?;
    let theta1 = unwrap_phase(torus.grid, &vals.iter().map(|v| v.arg()).collect::<Vec<_>>())?;
    let scale = if torus.t > 0.0 { torus.t } else { 1.0 };
    let mut theta2 = Vec::with_capacity(vals.len());
    for ((om, z), fr) in vals.iter().zip(&torus.psi).zip(&torus.frames) {
        let h = metric.hermitian(z)?;
        let n = fr.len();
        let gram = nalgebra::DMatrix::from_fn(n, n, |a, b| {
            let mut s = crate::linalg::C64::new(0.0, 0.0);
            for i in 0..z.len() {
                for k in 0..z.len() {
                    s += h[(i, k)] * fr[a][i] * fr[b][k].conj();
                }
            }
            2.0 * s.re
        });
        let det = gram.determinant();
        if !(det > 0.0) {
            return Err(Error::DegenerateFrame);
        }
        theta2.push(-0.5 * ((om / scale).norm_sqr() / det).ln());
    }
    Ok((theta1, theta2))
}
