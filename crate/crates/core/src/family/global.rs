//! Global hypersurface families in projective space and their chart restrictions.

use serde::{Deserialize, Serialize};

use super::chart::FamilyChart;
use super::poly::SparsePoly;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::toric::ReflexivePolytopePair;

/// Family `prod x + t sum_m c_m x^{m+1}` with `|c_m| = tau^{w_m - w_ref}`.
///
/// `w_ref` is the smallest vertex weight, so Fermat families have unit corner
/// coefficients. The local-model preset replaces every chart polynomial by the
/// constant `1` and is only meaningful chart by chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalFamily {
    pub name: String,
    pub polytope: ReflexivePolytopePair,
    pub tau: f64,
    /// Coefficient phases aligned with `polytope.delta0`.
    pub phases: Vec<f64>,
    pub local_model: bool,
}

impl GlobalFamily {
    pub fn new(name: &str, polytope: ReflexivePolytopePair, tau: f64, phases: Option<Vec<f64>>) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::config("tau", "must lie in (0, 1)"));
        }
        let phases = phases.unwrap_or_else(|| vec![0.0; polytope.delta0.len()]);
        if phases.len() != polytope.delta0.len() {
            return Err(Error::config("phases", "length must match the support"));
        }
        Ok(GlobalFamily {
            name: name.into(),
            polytope,
            tau,
            phases,
            local_model: false,
        })
    }

    /// Fermat family of degree `N + 1` in `P^N`.
    pub fn fermat(ambient_dim: usize) -> Result<Self> {
        let name = match ambient_dim {
            2 => "fermat-cubic".to_string(),
            3 => "fermat-quartic".to_string(),
            4 => "fermat-quintic".to_string(),
            n => format!("fermat-p{n}"),
        };
        Self::new(&name, ReflexivePolytopePair::fermat(ambient_dim)?, 0.5, None)
    }

    /// The toric local model `prod z = -t` in every chart of `P^N`.
    pub fn local_model(ambient_dim: usize) -> Result<Self> {
        let mut f = Self::fermat(ambient_dim)?;
        f.name = format!("local-model-p{ambient_dim}");
        f.local_model = true;
        Ok(f)
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "fermat-cubic" => Self::fermat(2),
            "fermat-quartic" => Self::fermat(3),
            "fermat-quintic" => Self::fermat(4),
            "local-model-1" => Self::local_model(2),
            "local-model-2" => Self::local_model(3),
            "local-model-3" => Self::local_model(4),
            other => Err(Error::config("family.preset", format!("unknown preset `{other}`"))),
        }
    }

    /// `N`; fibres have dimension `N - 1`.
    pub fn ambient_dim(&self) -> usize {
        self.polytope.ambient_dim
    }

    pub fn fibre_dim(&self) -> usize {
        self.ambient_dim() - 1
    }

    fn w_ref(&self) -> f64 {
        self.polytope
            .delta
            .iter()
            .filter_map(|v| self.polytope.weight(v))
            .fold(f64::INFINITY, f64::min)
    }

    /// Global coefficients `c_m` for `m != m_o`, with their lattice points.
    pub fn coefficients(&self) -> Vec<(Vec<i64>, C64)> {
        let w_ref = self.w_ref();
        self.polytope
            .delta0
            .iter()
            .zip(&self.polytope.weights)
            .zip(&self.phases)
            .filter(|((m, _), _)| **m != self.polytope.interior_point)
            .map(|((m, w), ph)| {
                (m.clone(), C64::from_polar(self.tau.powf(w - w_ref), *ph))
            })
            .collect()
    }

    /// Homogeneous polynomial `s(x)` (without the interior monomial), as
    /// `(homogeneous exponent, coefficient)` pairs.
    pub fn section(&self) -> Vec<(Vec<u32>, C64)> {
        self.coefficients()
            .into_iter()
            .map(|(m, c)| (m.iter().map(|v| (v + 1) as u32).collect(), c))
            .collect()
    }

    /// Near-large-complex-limit gate `t <= tau^{-w_{m_o}}`.
    pub fn near_lcl(&self, t: f64) -> bool {
        let w_o = self
            .polytope
            .weight(&self.polytope.interior_point)
            .unwrap_or(0.0);
        t <= self.tau.powf(-w_o)
    }

    /// Restriction to the vertex chart `a`: `p = p(0) (1 + pcheck)`.
    pub fn chart(&self, a: usize) -> Result<FamilyChart> {
        let n_amb = self.ambient_dim();
        if a > n_amb {
            return Err(Error::config("chart", format!("no vertex chart {a}")));
        }
        let orientation = {
            let c = self.polytope.transition(0, a);
            let m = nalgebra::DMatrix::from_fn(n_amb, n_amb, |r, k| c[r][k] as f64);
            m.determinant().signum()
        };
        let w_ref = self.w_ref();
        let mut chart = if self.local_model {
            FamilyChart::local_model(n_amb - 1)
        } else {
            let mut p = SparsePoly::zero(n_amb);
            let mut weights = Vec::new();
            for ((m, w), (_, c)) in self
                .polytope
                .delta0
                .iter()
                .zip(&self.polytope.weights)
                .filter(|(m, _)| **m != self.polytope.interior_point)
                .zip(self.coefficients())
            {
                let e = self.polytope.chart_exponent(a, m);
                if e.iter().any(|&v| v < 0) {
                    return Err(Error::config("polytope", "lattice point outside the vertex cone"));
                }
                let e: Vec<u32> = e.iter().map(|&v| v as u32).collect();
                weights.push((e.clone(), w - w_ref));
                p.add_term(e, c);
            }
            let p0 = p.constant_term();
            if !(p0.re > 0.0) || p0.im.abs() > 1e-14 * p0.re {
                return Err(Error::config(
                    "phases",
                    format!("corner coefficient of chart {a} must be positive real, got {p0}"),
                ));
            }
            let mut pc = SparsePoly::zero(n_amb);
            for t in &p.terms {
                if t.exponent.iter().all(|&e| e == 0) {
                    continue;
                }
                pc.add_term(t.exponent.clone(), t.coeff / p0.re);
            }
            let mut ch = FamilyChart::new(n_amb - 1, pc)?;
            ch.t_scale = p0.re;
            ch.weights = weights;
            ch
        };
        chart.chart_id = a;
        chart.tau = self.tau;
        chart.orientation = orientation;
        Ok(chart)
    }

    /// Homogeneous coordinates (with `x_a = 1`) of a chart point.
    pub fn to_homogeneous(&self, a: usize, z: &[C64]) -> Vec<C64> {
        let mut x = Vec::with_capacity(z.len() + 1);
        let mut it = z.iter();
        for k in 0..=z.len() {
            x.push(if k == a { C64::new(1.0, 0.0) } else { *it.next().unwrap() });
        }
        x
    }

    /// Chart coordinates at vertex `b` of a homogeneous point.
    pub fn to_chart(&self, b: usize, x: &[C64]) -> Vec<C64> {
        (0..x.len()).filter(|&k| k != b).map(|k| x[k] / x[b]).collect()
    }

    /// Index of the chart coordinate corresponding to homogeneous index `k` in chart `a`.
    pub fn chart_index(a: usize, k: usize) -> usize {
        assert_ne!(a, k);
        if k < a {
            k
        } else {
            k - 1
        }
    }

    /// Homogeneous index of chart coordinate `i` in chart `a`.
    pub fn homogeneous_index(a: usize, i: usize) -> usize {
        if i < a {
            i
        } else {
            i + 1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fermat_cubic_chart_is_normalized() {
        let f = GlobalFamily::fermat(2).unwrap();
        for a in 0..3 {
            let ch = f.chart(a).unwrap();
            assert_eq!(ch.t_scale, 1.0);
            let z = [C64::new(0.3, -0.2), C64::new(0.9, 0.4)];
            let want = SparsePoly::fermat(2, 3).eval(&z);
            assert!((ch.p_check.eval(&z) - want).norm() < 1e-15);
        }
        assert!(f.near_lcl(1e-2) && !f.near_lcl(2e-2));
    }

    #[test]
    fn charts_agree_on_homogeneous_points() {
        let f = GlobalFamily::fermat(3).unwrap();
        let t = 1e-2;
        let c0 = f.chart(0).unwrap();
        let c2 = f.chart(2).unwrap();
        let w = [C64::new(0.7, 0.2), C64::new(-0.3, 0.9)];
        let z1 = c0.solve_graph_coordinate(1, &w, t, 1.0).unwrap();
        let z = vec![w[0], z1, w[1]];
        let x = f.to_homogeneous(0, &z);
        let y = f.to_chart(2, &x);
        // P only picks up the factor (x_0 / x_2)^4 between charts
        assert!(c2.defect(&y, t, 1.0) < 1e-13);
        assert!((c0.orientation.abs() - 1.0).abs() < 1e-15 && (c2.orientation.abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_corner_is_rejected() {
        let pol = ReflexivePolytopePair::fermat(2).unwrap();
        let idx = pol.delta0.iter().position(|m| m == &vec![2, -1, -1]).unwrap();
        let mut ph = vec![0.0; pol.delta0.len()];
        ph[idx] = std::f64::consts::PI;
        let f = GlobalFamily::new("x", pol, 0.5, Some(ph)).unwrap();
        assert!(f.chart(0).is_err());
        assert!(f.chart(1).is_ok());
    }
}
