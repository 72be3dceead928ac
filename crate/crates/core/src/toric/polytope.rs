//! Lattice data of the anticanonical polytope of projective space.
//!
//! Lattice points are stored in homogeneous form: a monomial `x^a` of degree
//! `N + 1` on `P^N` corresponds to `m = a - (1, .., 1)`, so `sum m = 0` and the
//! interior point `m_o` is the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unimodular local coordinates at a vertex: `z_k = chi^{basis[k]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexChart {
    pub vertex: usize,
    pub basis: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflexivePolytopePair {
    /// `N`, the dimension of the ambient projective space.
    pub ambient_dim: usize,
    pub delta: Vec<Vec<i64>>,
    pub delta0: Vec<Vec<i64>>,
    pub interior_point: Vec<i64>,
    /// Weights aligned with `delta0`.
    pub weights: Vec<f64>,
    pub vertex_charts: Vec<VertexChart>,
}

/// Default weight of the interior point; it must dominate every other weight.
pub const INTERIOR_WEIGHT: f64 = -6.0;

impl ReflexivePolytopePair {
    /// Anticanonical polytope of `P^N` with the family supported on `support`
    /// (homogeneous exponents of degree `N + 1`). Weights default to `|m|^2`.
    pub fn projective(
        ambient_dim: usize,
        support: &[Vec<i64>],
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = ambient_dim;
        if n < 1 {
            return Err(Error::config("polytope.ambient_dim", "must be at least 1"));
        }
        let deg = (n + 1) as i64;
        let mut delta0 = Vec::new();
        for a in support {
            if a.len() != n + 1 || a.iter().any(|&v| v < 0) || a.iter().sum::<i64>() != deg {
                return Err(Error::config(
                    "polytope.support",
                    format!("exponent {a:?} is not a monomial of degree {deg}"),
                ));
            }
            let m: Vec<i64> = a.iter().map(|v| v - 1).collect();
            if !delta0.contains(&m) {
                delta0.push(m);
            }
        }
        let origin = vec![0i64; n + 1];
        if !delta0.contains(&origin) {
            delta0.push(origin.clone());
        }
        let delta: Vec<Vec<i64>> = (0..=n)
            .map(|a| (0..=n).map(|k| if k == a { n as i64 } else { -1 }).collect())
            .collect();
        for v in &delta {
            if !delta0.contains(v) {
                return Err(Error::config(
                    "polytope.support",
                    format!("vertex monomial {v:?} missing; every vertex chart needs p(0) != 0"),
                ));
            }
        }
        let weights = match weights {
            Some(w) => {
                if w.len() != delta0.len() {
                    return Err(Error::config("polytope.weights", "length must match support"));
                }
                w
            }
            None => delta0
                .iter()
                .map(|m| {
                    if m == &origin {
                        INTERIOR_WEIGHT
                    } else {
                        m.iter().map(|v| (v * v) as f64).sum()
                    }
                })
                .collect(),
        };
        let vertex_charts = (0..=n)
            .map(|a| VertexChart {
                vertex: a,
                basis: (0..=n)
                    .filter(|&b| b != a)
                    .map(|b| {
                        let mut e = vec![0i64; n + 1];
                        e[b] += 1;
                        e[a] -= 1;
                        e
                    })
                    .collect(),
            })
            .collect();
        let pair = ReflexivePolytopePair {
            ambient_dim: n,
            delta,
            delta0,
            interior_point: origin,
            weights,
            vertex_charts,
        };
        pair.check()?;
        Ok(pair)
    }

    /// Fermat support: the vertices and the interior point.
    pub fn fermat(ambient_dim: usize) -> Result<Self> {
        let n = ambient_dim;
        let mut support: Vec<Vec<i64>> = (0..=n)
            .map(|a| (0..=n).map(|k| if k == a { (n + 1) as i64 } else { 0 }).collect())
            .collect();
        support.push(vec![1; n + 1]);
        Self::projective(n, &support, None)
    }

    pub fn weight(&self, m: &[i64]) -> Option<f64> {
        self.delta0.iter().position(|v| v == m).map(|i| self.weights[i])
    }

    /// Checks the invariants: unique interior point, weight signs, strict
    /// convexity on triples and unimodular vertex charts.
    pub fn check(&self) -> Result<()> {
        let interior: Vec<&Vec<i64>> = self
            .delta0
            .iter()
            .filter(|m| m.iter().all(|&v| v > -1))
            .collect();
        if interior.len() != 1 || interior[0] != &self.interior_point {
            return Err(Error::config("polytope", "interior point must be unique and at the origin"));
        }
        for (m, w) in self.delta0.iter().zip(&self.weights) {
            let ok = if m == &self.interior_point {
                *w < 0.0
            } else {
                *w > 0.0
            };
            if !ok {
                return Err(Error::config("polytope.weights", format!("bad sign at {m:?}")));
            }
        }
        self.check_convexity()?;
        for chart in &self.vertex_charts {
            if lattice_det(&chart.basis).abs() != 1 {
                return Err(Error::config(
                    "polytope.vertex_charts",
                    format!("vertex {} is not smooth", chart.vertex),
                ));
            }
        }
        Ok(())
    }

    fn check_convexity(&self) -> Result<()> {
        let pts: Vec<Vec<f64>> = self
            .delta0
            .iter()
            .map(|m| m.iter().map(|&v| v as f64).collect())
            .collect();
        let np = pts.len();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for a in 0..np {
            for b in a + 1..np {
                groups.push(vec![a, b]);
                for c in b + 1..np {
                    groups.push(vec![a, b, c]);
                }
            }
        }
        for i in 0..np {
            for g in groups.iter().filter(|g| !g.contains(&i)) {
                let simplex: Vec<&Vec<f64>> = g.iter().map(|&k| &pts[k]).collect();
                if let Some(lam) = barycentric(&pts[i], &simplex) {
                    let interp: f64 = lam.iter().zip(g).map(|(l, &k)| l * self.weights[k]).sum();
                    if !(self.weights[i] < interp) {
                        return Err(Error::config(
                            "polytope.weights",
                            format!("not strictly convex at {:?}", self.delta0[i]),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Integer matrix `C` with `log z^(to) = C log z^(from)` (both unimodular).
    pub fn transition(&self, from: usize, to: usize) -> Vec<Vec<i64>> {
        let fa = &self.vertex_charts[from].basis;
        let tb = &self.vertex_charts[to].basis;
        tb.iter().map(|beta| lattice_coords(fa, beta)).collect()
    }

    /// Chart exponent of the lattice point `m` at vertex chart `a`.
    pub fn chart_exponent(&self, a: usize, m: &[i64]) -> Vec<i64> {
        let diff: Vec<i64> = m.iter().zip(&self.delta[a]).map(|(x, y)| x - y).collect();
        lattice_coords(&self.vertex_charts[a].basis, &diff)
    }
}

/// Barycentric coordinates of `p` w.r.t. the simplex, if `p` lies in its closed hull.
fn barycentric(p: &[f64], simplex: &[&Vec<f64>]) -> Option<Vec<f64>> {
    let k = simplex.len();
    let d = p.len();
    // least squares on the affine span: p - s0 = sum_{j>0} l_j (s_j - s0)
    let a = nalgebra::DMatrix::from_fn(d, k - 1, |r, c| simplex[c + 1][r] - simplex[0][r]);
    let rhs = nalgebra::DVector::from_fn(d, |r, _| p[r] - simplex[0][r]);
    let svd = a.clone().svd(true, true);
    if svd.singular_values.iter().any(|s| *s < 1e-9) {
        return None;
    }
    let l = svd.solve(&rhs, 1e-12).ok()?;
    if (&a * &l - &rhs).amax() > 1e-9 {
        return None;
    }
    let l0 = 1.0 - l.sum();
    let mut lam = vec![l0];
    lam.extend(l.iter());
    if lam.iter().all(|v| *v >= -1e-12) {
        Some(lam)
    } else {
        None
    }
}

/// Determinant of a lattice basis of `{m : sum m = 0}` (drop the last coordinate).
fn lattice_det(basis: &[Vec<i64>]) -> i64 {
    let n = basis.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |r, c| basis[c][r] as f64);
    m.determinant().round() as i64
}

/// Integer coordinates of `v` in the given lattice basis.
fn lattice_coords(basis: &[Vec<i64>], v: &[i64]) -> Vec<i64> {
    let n = basis.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |r, c| basis[c][r] as f64);
    let rhs = nalgebra::DVector::from_fn(n, |r, _| v[r] as f64);
    let x = m.lu().solve(&rhs).expect("unimodular basis");
    x.iter().map(|v| v.round() as i64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fermat_cubic_data() {
        let p = ReflexivePolytopePair::fermat(2).unwrap();
        assert_eq!(p.delta.len(), 3);
        assert_eq!(p.delta0.len(), 4);
        assert_eq!(p.weight(&[0, 0, 0]), Some(INTERIOR_WEIGHT));
        assert_eq!(p.weight(&[2, -1, -1]), Some(6.0));
        // the interior monomial restricts to prod z in every chart
        for a in 0..3 {
            assert_eq!(p.chart_exponent(a, &[0, 0, 0]), vec![1, 1]);
        }
        assert_eq!(p.chart_exponent(0, &[-1, 2, -1]), vec![3, 0]);
    }

    #[test]
    fn transitions_are_unimodular_and_compose() {
        let p = ReflexivePolytopePair::fermat(3).unwrap();
        let t01 = p.transition(0, 1);
        let t10 = p.transition(1, 0);
        let d = nalgebra::DMatrix::from_fn(3, 3, |r, c| t01[r][c] as f64).determinant();
        assert!((d.abs() - 1.0).abs() < 1e-12);
        let prod = nalgebra::DMatrix::from_fn(3, 3, |r, c| t10[r][c] as f64)
            * nalgebra::DMatrix::from_fn(3, 3, |r, c| t01[r][c] as f64);
        assert_eq!(prod, nalgebra::DMatrix::identity(3, 3));
    }

    #[test]
    fn weights_must_be_convex() {
        let support: Vec<Vec<i64>> = vec![vec![3, 0, 0], vec![0, 3, 0], vec![0, 0, 3], vec![1, 1, 1], vec![2, 1, 0]];
        let ok = ReflexivePolytopePair::projective(2, &support, None);
        assert!(ok.is_ok());
        // (2,1,0) sits on the edge between (3,0,0) and (0,3,0); a large weight breaks convexity
        let bad = ReflexivePolytopePair::projective(2, &support, Some(vec![6.0, 6.0, 6.0, -10.0, 7.0]));
        assert!(matches!(bad, Err(Error::Config { .. })));
        let bad_sign = ReflexivePolytopePair::projective(2, &support, Some(vec![6.0, 6.0, 6.0, 1.0, 2.0]));
        assert!(bad_sign.is_err());
    }
}
