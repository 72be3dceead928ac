//! Toric Kähler potentials as functions of logarithmic radii.
//!
//! A potential is a convex function `rho(x)` of `x_k = log |z_k|^2`. Its
//! gradient gives the moment coordinates and its Hessian the metric in the
//! `(theta, rho)` action-angle chart. The built-ins have hand-coded
//! derivatives; [`ToricKahlerPotential::validate`] cross-checks them against
//! central differences.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

/// One term `coeff * exp(m . x)` of a sum-of-exponentials potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub coeff: f64,
    pub exponent: Vec<i32>,
}

/// Constraint used to restrict an ambient potential to a toric hypersurface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Constraint {
    /// `x_g = c - sum_{k != g} x_k`, the local model `prod z = -t` with `c = log t^2`.
    Product { c: f64 },
    /// `x_g -> -infinity`, the coordinate hyperplane `z_g = 0`.
    Limit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ToricKahlerPotential {
    /// `rho = 1/2 x^T A x` with `A` symmetric positive definite (row-major).
    Quadratic { dim: usize, a: Vec<f64> },
    /// `rho = log(1 + sum e^{x_k})`, the affine chart of projective space.
    FubiniStudy { dim: usize },
    /// `rho = sum_j c_j exp(m_j . x)`; with `m_j = e_j` this is the Euclidean metric.
    SumExp { dim: usize, terms: Vec<ExpTerm> },
    /// Restriction `rho(x_g = c - sum x_k, rest)` of an ambient potential.
    Induced {
        ambient: Box<ToricKahlerPotential>,
        graph_index: usize,
        c: f64,
    },
}

impl ToricKahlerPotential {
    /// The potential `1/2 |x|^2` called "flat" throughout.
    pub fn flat(dim: usize) -> Self {
        Self::scaled_flat(dim, 1.0)
    }

    pub fn scaled_flat(dim: usize, scale: f64) -> Self {
        let mut a = vec![0.0; dim * dim];
        for k in 0..dim {
            a[k * dim + k] = scale;
        }
        ToricKahlerPotential::Quadratic { dim, a }
    }

    pub fn quadratic(a: DMatrix<f64>) -> Result<Self> {
        let dim = a.nrows();
        if a.ncols() != dim {
            return Err(Error::config("potential.a", "matrix must be square"));
        }
        if (&a - a.transpose()).amax() > 1e-12 * a.amax().max(1.0) {
            return Err(Error::config("potential.a", "matrix must be symmetric"));
        }
        if a.clone().cholesky().is_none() {
            return Err(Error::NonPositiveDefinite { x: vec![0.0; dim] });
        }
        Ok(ToricKahlerPotential::Quadratic {
            dim,
            a: a.transpose().as_slice().to_vec(),
        })
    }

    pub fn fubini_study(dim: usize) -> Self {
        ToricKahlerPotential::FubiniStudy { dim }
    }

    pub fn euclidean(dim: usize) -> Self {
        let terms = (0..dim)
            .map(|k| {
                let mut m = vec![0; dim];
                m[k] = 1;
                ExpTerm {
                    coeff: 1.0,
                    exponent: m,
                }
            })
            .collect();
        ToricKahlerPotential::SumExp { dim, terms }
    }

    pub fn sum_exp(dim: usize, terms: Vec<ExpTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::config("potential.terms", "at least one term required"));
        }
        for t in &terms {
            if t.exponent.len() != dim {
                return Err(Error::config("potential.terms", "exponent length must equal dim"));
            }
            if !(t.coeff > 0.0) {
                return Err(Error::config("potential.terms", "coefficients must be positive"));
            }
        }
        Ok(ToricKahlerPotential::SumExp { dim, terms })
    }

    /// Short identifier recorded in output streams.
    pub fn id(&self) -> String {
        match self {
            ToricKahlerPotential::Quadratic { .. } => "flat".into(),
            ToricKahlerPotential::FubiniStudy { .. } => "fubini-study".into(),
            ToricKahlerPotential::SumExp { .. } => "sum-exp".into(),
            ToricKahlerPotential::Induced { ambient, .. } => format!("induced({})", ambient.id()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ToricKahlerPotential::Quadratic { dim, .. }
            | ToricKahlerPotential::FubiniStudy { dim }
            | ToricKahlerPotential::SumExp { dim, .. } => *dim,
            ToricKahlerPotential::Induced { ambient, .. } => ambient.dim() - 1,
        }
    }

    fn lift(ambient_dim: usize, g: usize, c: f64, x: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(ambient_dim);
        let s: f64 = x.iter().sum();
        let mut it = x.iter();
        for k in 0..ambient_dim {
            if k == g {
                y.push(c - s);
            } else {
                y.push(*it.next().unwrap());
            }
        }
        y
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ToricKahlerPotential::Quadratic { dim, a } => {
                let mut v = 0.0;
                for i in 0..*dim {
                    for j in 0..*dim {
                        v += x[i] * a[i * dim + j] * x[j];
                    }
                }
                0.5 * v
            }
            ToricKahlerPotential::FubiniStudy { .. } => {
                (1.0 + x.iter().map(|v| v.exp()).sum::<f64>()).ln()
            }
            ToricKahlerPotential::SumExp { terms, .. } => terms
                .iter()
                .map(|t| t.coeff * dot_i(&t.exponent, x).exp())
                .sum(),
            ToricKahlerPotential::Induced {
                ambient,
                graph_index,
                c,
            } => ambient.value(&Self::lift(ambient.dim(), *graph_index, *c, x)),
        }
    }

    /// Moment coordinates `d rho / d x_k`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ToricKahlerPotential::Quadratic { dim, a } => (0..*dim)
                .map(|i| (0..*dim).map(|j| a[i * dim + j] * x[j]).sum())
                .collect(),
            ToricKahlerPotential::FubiniStudy { .. } => {
                let e: Vec<f64> = x.iter().map(|v| v.exp()).collect();
                let s = 1.0 + e.iter().sum::<f64>();
                e.iter().map(|v| v / s).collect()
            }
            ToricKahlerPotential::SumExp { dim, terms } => {
                let mut g = vec![0.0; *dim];
                for t in terms {
                    let w = t.coeff * dot_i(&t.exponent, x).exp();
                    for k in 0..*dim {
                        g[k] += w * t.exponent[k] as f64;
                    }
                }
                g
            }
            ToricKahlerPotential::Induced {
                ambient,
                graph_index,
                c,
            } => {
                let y = Self::lift(ambient.dim(), *graph_index, *c, x);
                let gy = ambient.gradient(&y);
                let gg = gy[*graph_index];
                gy.iter()
                    .enumerate()
                    .filter(|(k, _)| k != graph_index)
                    .map(|(_, v)| v - gg)
                    .collect()
            }
        }
    }

    /// Hessian `d^2 rho / dx_j dx_k`.
    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        match self {
            ToricKahlerPotential::Quadratic { dim, a } => DMatrix::from_row_slice(*dim, *dim, a),
            ToricKahlerPotential::FubiniStudy { dim } => {
                let e: Vec<f64> = x.iter().map(|v| v.exp()).collect();
                let s = 1.0 + e.iter().sum::<f64>();
                DMatrix::from_fn(*dim, *dim, |i, j| {
                    let d = if i == j { e[i] / s } else { 0.0 };
                    d - e[i] * e[j] / (s * s)
                })
            }
            ToricKahlerPotential::SumExp { dim, terms } => {
                let mut h = DMatrix::zeros(*dim, *dim);
                for t in terms {
                    let w = t.coeff * dot_i(&t.exponent, x).exp();
                    for i in 0..*dim {
                        for j in 0..*dim {
                            h[(i, j)] += w * (t.exponent[i] * t.exponent[j]) as f64;
                        }
                    }
                }
                h
            }
            ToricKahlerPotential::Induced {
                ambient,
                graph_index,
                c,
            } => {
                let y = Self::lift(ambient.dim(), *graph_index, *c, x);
                let b = constraint_differential(ambient.dim(), *graph_index);
                b.transpose() * ambient.hessian(&y) * b
            }
        }
    }

    /// Restricts this (ambient) potential to a toric hypersurface.
    pub fn induce(&self, graph_index: usize, constraint: Constraint) -> Result<Self> {
        if graph_index >= self.dim() || self.dim() < 2 {
            return Err(Error::config("graph_index", "out of range for potential dimension"));
        }
        match constraint {
            Constraint::Product { c } => {
                if !c.is_finite() {
                    return Err(Error::config("constraint.c", "must be finite"));
                }
                Ok(ToricKahlerPotential::Induced {
                    ambient: Box::new(self.clone()),
                    graph_index,
                    c,
                })
            }
            Constraint::Limit => self.limit(graph_index),
        }
    }

    fn limit(&self, g: usize) -> Result<Self> {
        let undefined = || Error::LimitUndefined {
            potential: self.id(),
            index: g,
        };
        match self {
            ToricKahlerPotential::FubiniStudy { dim } => {
                Ok(ToricKahlerPotential::FubiniStudy { dim: dim - 1 })
            }
            ToricKahlerPotential::SumExp { dim, terms } => {
                if terms.iter().any(|t| t.exponent[g] < 0) {
                    return Err(undefined());
                }
                let kept: Vec<ExpTerm> = terms
                    .iter()
                    .filter(|t| t.exponent[g] == 0)
                    .map(|t| ExpTerm {
                        coeff: t.coeff,
                        exponent: drop_index(&t.exponent, g),
                    })
                    .collect();
                if kept.is_empty() {
                    return Err(undefined());
                }
                Ok(ToricKahlerPotential::SumExp {
                    dim: dim - 1,
                    terms: kept,
                })
            }
            ToricKahlerPotential::Quadratic { .. } | ToricKahlerPotential::Induced { .. } => {
                Err(undefined())
            }
        }
    }

    /// Hermitian metric `H_ab = d_a dbar_b rho` in the complex chart at `z`.
    ///
    /// Closed forms are used where they extend across coordinate hyperplanes;
    /// otherwise the toric formula `rho_ab / (z_a conj z_b)` requires all
    /// coordinates to be nonzero.
    pub fn hermitian(&self, z: &[C64]) -> Result<CMat> {
        let d = z.len();
        match self {
            ToricKahlerPotential::FubiniStudy { .. } => {
                let s = 1.0 + z.iter().map(|v| v.norm_sqr()).sum::<f64>();
                let mut h = CMat::zeros(d);
                for a in 0..d {
                    for b in 0..d {
                        let delta = if a == b { 1.0 / s } else { 0.0 };
                        h[(a, b)] = C64::new(delta, 0.0) - z[a].conj() * z[b] / (s * s);
                    }
                }
                Ok(h)
            }
            ToricKahlerPotential::SumExp { terms, .. }
                if terms.iter().all(|t| t.exponent.iter().all(|&m| m >= 0)) =>
            {
                let mut h = CMat::zeros(d);
                for t in terms {
                    let grad = monomial_gradient(&t.exponent, z);
                    for a in 0..d {
                        for b in 0..d {
                            h[(a, b)] += t.coeff * grad[a] * grad[b].conj();
                        }
                    }
                }
                Ok(h)
            }
            _ => {
                let x = log_radii(self, z)?;
                let hx = self.hessian(&x);
                let mut h = CMat::zeros(d);
                for a in 0..d {
                    for b in 0..d {
                        h[(a, b)] = hx[(a, b)] / (z[a] * z[b].conj());
                    }
                }
                Ok(h)
            }
        }
    }

    /// `conj(H)^{-1}`, the operator turning `conj(dP)` into a gradient vector.
    pub fn hermitian_inverse_conj(&self, z: &[C64]) -> Result<CMat> {
        match self {
            ToricKahlerPotential::FubiniStudy { .. } => {
                let d = z.len();
                let s = 1.0 + z.iter().map(|v| v.norm_sqr()).sum::<f64>();
                let mut m = CMat::zeros(d);
                for a in 0..d {
                    for b in 0..d {
                        let delta = if a == b { 1.0 } else { 0.0 };
                        m[(a, b)] = (C64::new(delta, 0.0) + z[a] * z[b].conj()) * s;
                    }
                }
                Ok(m)
            }
            ToricKahlerPotential::Quadratic { .. } | ToricKahlerPotential::Induced { .. } => {
                let d = z.len();
                let x = log_radii(self, z)?;
                let inv = self
                    .hessian(&x)
                    .try_inverse()
                    .ok_or(Error::NonPositiveDefinite { x: x.clone() })?;
                let mut m = CMat::zeros(d);
                for a in 0..d {
                    for b in 0..d {
                        m[(a, b)] = z[a].conj() * z[b] * inv[(a, b)];
                    }
                }
                Ok(m)
            }
            ToricKahlerPotential::SumExp { .. } => self
                .hermitian(z)?
                .conj()
                .inverse()
                .ok_or(Error::NonPositiveDefinite {
                    x: z.iter().map(|v| v.norm_sqr().ln()).collect(),
                }),
        }
    }

    /// Cross-checks gradient and Hessian against central differences at the
    /// given probes; returns the worst relative discrepancy.
    pub fn validate(&self, probes: &[Vec<f64>]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let h = 1e-5;
        for x in probes {
            let g = self.gradient(x);
            let hs = self.hessian(x);
            if hs.clone().cholesky().is_none() {
                return Err(Error::NonPositiveDefinite { x: x.clone() });
            }
            let scale_g = g.iter().fold(1e-3_f64, |m, v| m.max(v.abs()));
            let scale_h = hs.amax().max(1e-3);
            for k in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let fd = (self.value(&xp) - self.value(&xm)) / (2.0 * h);
                worst = worst.max((fd - g[k]).abs() / scale_g);
                let gp = self.gradient(&xp);
                let gm = self.gradient(&xm);
                for j in 0..x.len() {
                    let fd = (gp[j] - gm[j]) / (2.0 * h);
                    worst = worst.max((fd - hs[(j, k)]).abs() / scale_h);
                }
            }
        }
        Ok(worst)
    }
}

/// Differential `B` of `(x_k)_{k != g} -> (x_0 .. x_n)` under the product constraint.
pub fn constraint_differential(ambient_dim: usize, g: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(ambient_dim, ambient_dim - 1);
    let mut col = 0;
    for k in 0..ambient_dim {
        if k == g {
            continue;
        }
        b[(k, col)] = 1.0;
        b[(g, col)] = -1.0;
        col += 1;
    }
    b
}

fn log_radii(p: &ToricKahlerPotential, z: &[C64]) -> Result<Vec<f64>> {
    let x: Vec<f64> = z.iter().map(|v| v.norm_sqr().ln()).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::LimitUndefined {
            potential: p.id(),
            index: x.iter().position(|v| !v.is_finite()).unwrap_or(0),
        });
    }
    Ok(x)
}

fn dot_i(m: &[i32], x: &[f64]) -> f64 {
    m.iter().zip(x).map(|(a, b)| *a as f64 * b).sum()
}

fn drop_index<T: Clone>(v: &[T], g: usize) -> Vec<T> {
    v.iter()
        .enumerate()
        .filter(|(k, _)| *k != g)
        .map(|(_, x)| x.clone())
        .collect()
}

/// Holomorphic gradient of `z^m` for a nonnegative exponent.
fn monomial_gradient(m: &[i32], z: &[C64]) -> Vec<C64> {
    (0..z.len())
        .map(|a| {
            if m[a] == 0 {
                return C64::new(0.0, 0.0);
            }
            let mut v = C64::new(m[a] as f64, 0.0);
            for (k, zk) in z.iter().enumerate() {
                let e = if k == a { m[k] - 1 } else { m[k] };
                if e > 0 {
                    v *= zk.powi(e);
                }
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fubini_study_at_origin() {
        let p = ToricKahlerPotential::fubini_study(1);
        assert!((p.gradient(&[0.0])[0] - 0.5).abs() < 1e-15);
        assert!((p.hessian(&[0.0])[(0, 0)] - 0.25).abs() < 1e-15);
        // oracle: central differences of log(1 + e^x)
        let f = |x: f64| (1.0 + x.exp()).ln();
        let h = 1e-4;
        let fd = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        assert!((fd - 0.25).abs() < 1e-7);
    }

    #[test]
    fn flat_gradient_is_identity() {
        let p = ToricKahlerPotential::flat(2);
        assert_eq!(p.gradient(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(p.gradient(&[2.0, -1.0]), vec![2.0, -1.0]);
        assert_eq!(p.hessian(&[3.0, 1.0]), DMatrix::identity(2, 2));
    }

    #[test]
    fn induced_flat_potential() {
        let p = ToricKahlerPotential::flat(2)
            .induce(0, Constraint::Product { c: 0.0 })
            .unwrap();
        assert!((p.value(&[1.5]) - 1.5 * 1.5).abs() < 1e-14);
        assert!((p.hessian(&[0.3])[(0, 0)] - 2.0).abs() < 1e-14);

        let c = (0.01f64 * 0.01).ln();
        let p = ToricKahlerPotential::flat(3)
            .induce(0, Constraint::Product { c })
            .unwrap();
        let g = p.gradient(&[0.0, 0.0]);
        assert!((g[0] + c).abs() < 1e-12 && (g[1] + c).abs() < 1e-12);
        // finite-difference oracle
        let h = 1e-5;
        let fd = (p.value(&[h, 0.0]) - p.value(&[-h, 0.0])) / (2.0 * h);
        assert!((fd - g[0]).abs() < 1e-6 * c.abs());
    }

    #[test]
    fn fubini_study_limit_drops_coordinate() {
        let p = ToricKahlerPotential::fubini_study(3)
            .induce(1, Constraint::Limit)
            .unwrap();
        assert_eq!(p, ToricKahlerPotential::fubini_study(2));
        let err = ToricKahlerPotential::flat(3).induce(1, Constraint::Limit);
        assert!(matches!(err, Err(Error::LimitUndefined { .. })));
    }

    #[test]
    fn builtins_pass_finite_difference_validation() {
        let probes = vec![vec![0.1, -0.7, 0.4], vec![-2.0, 1.0, 0.0]];
        let mut a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0]);
        a = (&a + a.transpose()) * 0.5;
        let pots = vec![
            ToricKahlerPotential::flat(3),
            ToricKahlerPotential::quadratic(a).unwrap(),
            ToricKahlerPotential::fubini_study(3),
            ToricKahlerPotential::euclidean(3),
        ];
        for p in pots {
            assert!(p.validate(&probes).unwrap() < 1e-6, "{}", p.id());
        }
        let ind = ToricKahlerPotential::fubini_study(4)
            .induce(2, Constraint::Product { c: -5.0 })
            .unwrap();
        assert!(ind.validate(&probes).unwrap() < 1e-6);
    }

    #[test]
    fn hermitian_closed_forms_match_toric_formula() {
        let z = vec![C64::new(0.3, 0.4), C64::new(-0.8, 0.1)];
        for p in [
            ToricKahlerPotential::fubini_study(2),
            ToricKahlerPotential::euclidean(2),
        ] {
            let closed = p.hermitian(&z).unwrap();
            let x: Vec<f64> = z.iter().map(|v| v.norm_sqr().ln()).collect();
            let hx = p.hessian(&x);
            for a in 0..2 {
                for b in 0..2 {
                    let t = hx[(a, b)] / (z[a] * z[b].conj());
                    assert!((closed[(a, b)] - t).norm() < 1e-13);
                }
            }
            let inv = p.hermitian_inverse_conj(&z).unwrap();
            let id = closed.conj().mul(&inv);
            assert!(id.add_scaled(&CMat::identity(2), C64::new(-1.0, 0.0)).max_abs() < 1e-13);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn potentials(dim: usize) -> Vec<ToricKahlerPotential> {
            vec![
                ToricKahlerPotential::flat(dim),
                ToricKahlerPotential::fubini_study(dim),
                ToricKahlerPotential::euclidean(dim),
                ToricKahlerPotential::fubini_study(dim + 1)
                    .induce(dim, Constraint::Product { c: -7.0 })
                    .unwrap(),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn hessian_is_positive_and_consistent(x in prop::collection::vec(-4.0f64..2.0, 1..=3)) {
                for p in potentials(x.len()) {
                    let h = p.hessian(&x);
                    prop_assert!((&h - h.transpose()).amax() <= 1e-14 * h.amax());
                    prop_assert!(h.clone().cholesky().is_some(), "{}", p.id());
                    prop_assert!(p.validate(std::slice::from_ref(&x)).unwrap() <= 1e-6, "{}", p.id());
                }
            }

            #[test]
            fn induced_hessian_is_chain_rule(y in prop::collection::vec(-3.0f64..1.0, 1..=3), g_pick: prop::sample::Index, c in -9.0f64..-1.0) {
                let d = y.len() + 1;
                let g = g_pick.index(d);
                let amb = ToricKahlerPotential::fubini_study(d);
                let ind = amb.induce(g, Constraint::Product { c }).unwrap();
                let mut x = Vec::with_capacity(d);
                let mut it = y.iter();
                for k in 0..d {
                    x.push(if k == g { c - y.iter().sum::<f64>() } else { *it.next().unwrap() });
                }
                let b = constraint_differential(d, g);
                let chain = b.transpose() * amb.hessian(&x) * &b;
                let h = ind.hessian(&y);
                prop_assert!((&h - &chain).amax() <= 1e-10 * chain.amax().max(1.0));
            }
        }
    }
}
