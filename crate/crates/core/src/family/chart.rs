//! The family `P(z; t, s) = prod z_k + t (1 + s pcheck(z))` in one vertex chart.

use serde::{Deserialize, Serialize};

use super::poly::SparsePoly;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::toric::ToricKahlerPotential;

/// Which parameter of the two-parameter family is being varied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    T,
    S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyChart {
    /// Fibre dimension; the chart has `n + 1` coordinates.
    pub n: usize,
    pub chart_id: usize,
    pub p_check: SparsePoly,
    /// Factor turning the global deformation parameter into the chart one.
    pub t_scale: f64,
    pub tau: f64,
    /// Weights `w_m` of the chart monomials, keyed by chart exponent.
    pub weights: Vec<(Vec<u32>, f64)>,
    /// `+1` or `-1`: sign of the chart form relative to the reference chart.
    pub orientation: f64,
}

/// A point of `X_{t,s}` in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypersurfacePoint {
    pub z: Vec<C64>,
    pub t: f64,
    pub s: f64,
}

/// `n` complex tangent vectors of `X_{t,s}` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    pub base: HypersurfacePoint,
    pub vectors: Vec<Vec<C64>>,
}

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

impl FamilyChart {
    pub fn new(n: usize, p_check: SparsePoly) -> Result<Self> {
        if p_check.vars != n + 1 {
            return Err(Error::config("p_check", "variable count must be n + 1"));
        }
        if p_check.constant_term() != ZERO {
            return Err(Error::config("p_check", "must vanish at the origin"));
        }
        Ok(FamilyChart {
            n,
            chart_id: 0,
            p_check,
            t_scale: 1.0,
            tau: 0.5,
            weights: Vec::new(),
            orientation: 1.0,
        })
    }

    /// The toric local model `prod z = -t` with `pcheck = 0`.
    pub fn local_model(n: usize) -> Self {
        Self::new(n, SparsePoly::zero(n + 1)).expect("zero polynomial is valid")
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// Value of `P` and its holomorphic gradient.
    pub fn evaluate_defining(&self, z: &[C64], t: f64, s: f64) -> (C64, Vec<C64>) {
        let (pv, pg) = self.p_check.eval_grad(z);
        let d = self.dim();
        let mut grad = vec![ZERO; d];
        for a in 0..d {
            let mut pr = ONE;
            for (k, zk) in z.iter().enumerate() {
                if k != a {
                    pr *= zk;
                }
            }
            grad[a] = pr + pg[a] * (t * s);
        }
        let prod: C64 = z.iter().product();
        (prod + (ONE + pv * s) * t, grad)
    }

    /// `dP/du` for the active parameter.
    pub fn param_derivative(&self, z: &[C64], t: f64, s: f64, param: Param) -> C64 {
        let pv = self.p_check.eval(z);
        match param {
            Param::T => ONE + pv * s,
            Param::S => pv * t,
        }
    }

    /// Holomorphic Hessian of `P`.
    pub fn defining_hessian(&self, z: &[C64], t: f64, s: f64) -> CMat {
        let d = self.dim();
        let mut h = self.p_check.hessian(z);
        for v in h.data.iter_mut() {
            *v *= t * s;
        }
        for a in 0..d {
            for b in 0..d {
                if a == b {
                    continue;
                }
                let mut pr = ONE;
                for (k, zk) in z.iter().enumerate() {
                    if k != a && k != b {
                        pr *= zk;
                    }
                }
                h[(a, b)] += pr;
            }
        }
        h
    }

    /// Solves `P = 0` for `z_g` given the other coordinates `w` (in order).
    ///
    /// Runs the fixed-point map `z_g -> -t (1 + s pcheck) / prod w`, which is a
    /// contraction when `t` is small relative to `|w|`, then polishes by Newton.
    pub fn solve_graph_coordinate(&self, g: usize, w: &[C64], t: f64, s: f64) -> Result<C64> {
        let d = self.dim();
        let mut z = Vec::with_capacity(d);
        let mut it = w.iter();
        for k in 0..d {
            z.push(if k == g { ZERO } else { *it.next().unwrap() });
        }
        let prod_w: C64 = w.iter().product();
        if prod_w.norm() == 0.0 {
            return Err(Error::NoContraction { factor: f64::INFINITY });
        }
        if t == 0.0 {
            return Ok(ZERO);
        }
        let map = |zg: C64, z: &mut Vec<C64>| {
            z[g] = zg;
            -(ONE + self.p_check.eval(z) * s) * t / prod_w
        };
        let mut x = map(ZERO, &mut z);
        if s == 0.0 || self.p_check.is_zero() {
            return Ok(x);
        }
        let mut prev_step = x.norm();
        let mut factor: f64 = 0.0;
        for _ in 0..200 {
            let nx = map(x, &mut z);
            let step = (nx - x).norm();
            if prev_step > 0.0 {
                factor = factor.max(step / prev_step);
            }
            x = nx;
            if step <= 1e-16 * x.norm().max(t) {
                break;
            }
            if factor > 0.9 {
                return Err(Error::NoContraction { factor });
            }
            prev_step = step;
        }
        if factor > 0.9 {
            return Err(Error::NoContraction { factor });
        }
        for _ in 0..3 {
            z[g] = x;
            let (p, grad) = self.evaluate_defining(&z, t, s);
            if grad[g].norm() == 0.0 {
                break;
            }
            let dx = p / grad[g];
            x -= dx;
            if dx.norm() <= 1e-17 * x.norm() {
                break;
            }
        }
        Ok(x)
    }

    /// Moves `z` onto `X_{t,s}` by Newton steps along `conj(grad P)`.
    pub fn project(&self, z: &mut [C64], t: f64, s: f64, steps: usize) {
        for _ in 0..steps {
            let (p, g) = self.evaluate_defining(z, t, s);
            let g2: f64 = g.iter().map(|v| v.norm_sqr()).sum();
            if g2 == 0.0 {
                return;
            }
            let f = p / g2;
            for (zk, gk) in z.iter_mut().zip(&g) {
                *zk -= gk.conj() * f;
            }
        }
    }

    /// Index maximizing `|dP/dz_j|`.
    pub fn residue_index(grad: &[C64]) -> usize {
        let mut j = 0;
        for k in 1..grad.len() {
            if grad[k].norm() > grad[j].norm() {
                j = k;
            }
        }
        j
    }

    /// `t Omega_t(v) = (-i)^{n+1} det[e_j, v_1 .. v_n] / (dP/dz_j)` for the residue
    /// index `j` (`None` selects the best-conditioned one).
    pub fn normalized_volume_form(
        &self,
        z: &[C64],
        t: f64,
        s: f64,
        frame: &[Vec<C64>],
        j: Option<usize>,
    ) -> Result<C64> {
        let (_, grad) = self.evaluate_defining(z, t, s);
        normalized_form_from_gradient(&grad, frame, j)
    }

    /// `Omega_t(v)`: the residue of the toric form relative to the parameter `t`.
    pub fn relative_volume_form(&self, frame: &TangentFrame, j: Option<usize>) -> Result<C64> {
        let p = &frame.base;
        if !(p.t > 0.0) {
            return Err(Error::SingularPoint { norm: 0.0 });
        }
        Ok(self.normalized_volume_form(&p.z, p.t, p.s, &frame.vectors, j)? / p.t)
    }

    /// Hamiltonian-gradient field `V = grad f / |grad f|^2` with `f = Re u`,
    /// as a complex vector (the real tangent vector `Re V, Im V`).
    pub fn flow_field(
        &self,
        z: &[C64],
        t: f64,
        s: f64,
        param: Param,
        metric: &ToricKahlerPotential,
    ) -> Result<Vec<C64>> {
        let (_, grad) = self.evaluate_defining(z, t, s);
        let pu = self.param_derivative(z, t, s, param);
        let hinv = metric.hermitian_inverse_conj(z)?;
        let cg: Vec<C64> = grad.iter().map(|v| v.conj()).collect();
        let w = hinv.mul_vec(&cg);
        let q: C64 = grad.iter().zip(&w).map(|(a, b)| a * b).sum::<C64>() * 0.5;
        if !(q.re > 1e-300) || q.norm() == 0.0 {
            return Err(Error::SingularPoint { norm: q.norm().sqrt() });
        }
        let f = -pu * 0.5 / q.re;
        Ok(w.iter().map(|v| v * f).collect())
    }

    /// Tangent frame `e_k - (dP_k / dP_j) e_j`, `k != j`, at a hypersurface point.
    pub fn tangent_frame(&self, point: &HypersurfacePoint) -> Result<TangentFrame> {
        let (_, grad) = self.evaluate_defining(&point.z, point.t, point.s);
        let j = Self::residue_index(&grad);
        if grad[j].norm() == 0.0 {
            return Err(Error::SingularPoint { norm: 0.0 });
        }
        let d = self.dim();
        let vectors = (0..d)
            .filter(|&k| k != j)
            .map(|k| {
                let mut v = vec![ZERO; d];
                v[k] = ONE;
                v[j] = -grad[k] / grad[j];
                v
            })
            .collect();
        Ok(TangentFrame {
            base: point.clone(),
            vectors,
        })
    }

    /// Relative defect `|P(z)| / scale(z)` of a candidate point.
    pub fn defect(&self, z: &[C64], t: f64, s: f64) -> f64 {
        let (p, grad) = self.evaluate_defining(z, t, s);
        let zn = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let gn = grad.iter().map(|v| v.norm()).fold(0.0, f64::max);
        p.norm() / (t.abs() + gn * zn).max(1e-300)
    }
}

/// Normalized residue form evaluated from a precomputed gradient.
pub fn normalized_form_from_gradient(
    grad: &[C64],
    frame: &[Vec<C64>],
    j: Option<usize>,
) -> Result<C64> {
    let d = grad.len();
    let j = j.unwrap_or_else(|| FamilyChart::residue_index(grad));
    let gj = grad[j];
    let gmax = grad.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if gmax <= 1e-300 || gj.norm() <= 1e-14 * gmax {
        return Err(Error::SingularPoint { norm: gmax });
    }
    let mut m = CMat::zeros(d);
    m[(j, 0)] = ONE;
    for (c, v) in frame.iter().enumerate() {
        for r in 0..d {
            m[(r, c + 1)] = v[r];
        }
    }
    let det = m.det();
    let scale: f64 = frame.iter().map(|v| crate::linalg::vnorm(v)).product();
    if det.norm() <= 1e-13 * scale {
        return Err(Error::DegenerateFrame);
    }
    Ok(neg_i_pow(d) * det / gj)
}

/// `(-i)^k`.
pub fn neg_i_pow(k: usize) -> C64 {
    match k % 4 {
        0 => ONE,
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cubic() -> FamilyChart {
        FamilyChart::new(1, SparsePoly::fermat(2, 3)).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let f = cubic();
        let (v, g) = f.evaluate_defining(&[ZERO, ZERO], 0.3, 0.7);
        assert_eq!(v, c(0.3, 0.0));
        assert!(g.iter().all(|x| x.norm() == 0.0));
        let (v, _) = f.evaluate_defining(&[ONE, ONE], 0.1, 1.0);
        // oracle: z0 z1 + t (1 + z0^3 + z1^3) by hand
        assert!((v - c(1.3, 0.0)).norm() < 1e-15);
        let lm = FamilyChart::local_model(2);
        let z = [c(0.5, 0.1), c(-0.2, 0.3), ONE];
        let t = -(z[0] * z[1] * z[2]).re;
        let z2 = [z[0], z[1], z[2] * (c(-t, 0.0) / (z[0] * z[1] * z[2]))];
        assert!(lm.evaluate_defining(&z2, t, 0.0).0.norm() < 1e-15);
    }

    #[test]
    fn graph_coordinate_cubic() {
        let f = cubic();
        let t = 0.01;
        let z0 = f.solve_graph_coordinate(0, &[ONE], t, 1.0).unwrap();
        // oracle: plain fixed-point iteration to machine precision
        let mut x = ZERO;
        for _ in 0..100 {
            x = -(ONE + x.powu(3) + ONE) * t;
        }
        assert!((z0 - x).norm() < 1e-16);
        assert!((z0 + 2.0 * t).norm() <= 10.0 * t * t);
        let (p, _) = f.evaluate_defining(&[z0, ONE], t, 1.0);
        assert!(p.norm() <= 1e-12 * (1.0 + t));
        let lm = FamilyChart::local_model(1);
        assert_eq!(lm.solve_graph_coordinate(1, &[c(0.0, 2.0)], 0.1, 1.0).unwrap(), c(0.0, 0.05));
        assert_eq!(f.solve_graph_coordinate(0, &[ONE], 0.0, 1.0).unwrap(), ZERO);
    }

    #[test]
    fn graph_coordinate_rejects_large_t() {
        let f = cubic();
        let r = f.solve_graph_coordinate(0, &[c(0.05, 0.0)], 0.5, 1.0);
        assert!(matches!(r, Err(Error::NoContraction { .. })));
    }

    #[test]
    fn flat_flow_field_at_local_model_origin_fibre() {
        // z0 z1 = -t in this normalization, so the field points along -Re z0
        let lm = FamilyChart::local_model(1);
        let v = lm
            .flow_field(&[ZERO, ONE], 0.0, 0.0, Param::T, &ToricKahlerPotential::euclidean(2))
            .unwrap();
        assert!((v[0] - c(-1.0, 0.0)).norm() < 1e-15 && v[1].norm() < 1e-15);
    }

    #[test]
    fn stationary_family_has_zero_field() {
        let lm = FamilyChart::local_model(2);
        let z = [c(0.5, 0.0), c(0.0, 0.4), c(0.05, 0.0)];
        let t = -(z[0] * z[1] * z[2]).re;
        let v = lm
            .flow_field(&z, t, 0.3, Param::S, &ToricKahlerPotential::fubini_study(3))
            .unwrap();
        assert!(v.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn residue_index_independence() {
        let lm = FamilyChart::local_model(1);
        let t = 0.01;
        let z1 = c(0.3, 0.4);
        let z = [-t / z1, z1];
        let p = HypersurfacePoint { z: z.to_vec(), t, s: 0.0 };
        let fr = lm.tangent_frame(&p).unwrap();
        let a = lm.relative_volume_form(&fr, Some(0)).unwrap();
        let b = lm.relative_volume_form(&fr, Some(1)).unwrap();
        assert!((a - b).norm() <= 1e-9 * a.norm());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn charts() -> Vec<FamilyChart> {
            vec![
                cubic(),
                FamilyChart::new(2, SparsePoly::fermat(3, 4)).unwrap(),
                FamilyChart::local_model(2),
            ]
        }

        /// Point of the chart with prescribed non-graph coordinates.
        fn point(f: &FamilyChart, w: &[C64], t: f64, s: f64) -> HypersurfacePoint {
            let z0 = f.solve_graph_coordinate(0, &w[..f.n], t, s).unwrap();
            let mut z = vec![z0];
            z.extend_from_slice(&w[..f.n]);
            HypersurfacePoint { z, t, s }
        }

        fn coords() -> impl Strategy<Value = Vec<C64>> {
            prop::collection::vec((0.5f64..1.5, 0.0f64..std::f64::consts::TAU), 2)
                .prop_map(|v| v.into_iter().map(|(r, a)| C64::from_polar(r, a)).collect())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn graph_coordinate_solves_the_equation(w in coords(), t in 1e-6f64..1e-2, s in 0.0f64..=1.0) {
                for f in charts() {
                    let p = point(&f, &w, t, s);
                    let (v, _) = f.evaluate_defining(&p.z, t, s);
                    prop_assert!(v.norm() <= 1e-12 * (1.0 + t));
                }
            }

            #[test]
            fn frames_are_tangent_and_field_is_normal(w in coords(), t in 1e-6f64..1e-2, s in 0.0f64..=1.0) {
                let metric = ToricKahlerPotential::fubini_study(3);
                for f in charts() {
                    let p = point(&f, &w, t, s);
                    let (_, grad) = f.evaluate_defining(&p.z, t, s);
                    let gn = crate::linalg::vnorm(&grad);
                    let fr = f.tangent_frame(&p).unwrap();
                    for v in &fr.vectors {
                        let d: C64 = grad.iter().zip(v).map(|(a, b)| a * b).sum();
                        prop_assert!(d.norm() <= 1e-9 * gn * crate::linalg::vnorm(v));
                    }
                    let m = if f.n == 1 { ToricKahlerPotential::fubini_study(2) } else { metric.clone() };
                    let h = m.hermitian(&p.z).unwrap();
                    let field = f.flow_field(&p.z, t, s, Param::T, &m).unwrap();
                    let pair = |a: &[C64], b: &[C64]| -> C64 {
                        let hb = h.mul_vec(&b.iter().map(|x| x.conj()).collect::<Vec<_>>());
                        a.iter().zip(&hb).map(|(x, y)| x * y).sum()
                    };
                    let vn = pair(&field, &field).norm().sqrt();
                    for v in &fr.vectors {
                        let xn = pair(v, v).norm().sqrt();
                        prop_assert!(pair(v, &field).norm() <= 1e-9 * vn * xn);
                    }
                }
            }

            #[test]
            fn volume_form_is_alternating(w in coords(), t in 1e-6f64..1e-2, a in -2.0f64..2.0, b in -2.0f64..2.0) {
                let f = FamilyChart::new(2, SparsePoly::fermat(3, 4)).unwrap();
                let p = point(&f, &w, t, 1.0);
                let fr = f.tangent_frame(&p).unwrap().vectors;
                let om = f.normalized_volume_form(&p.z, t, 1.0, &fr, None).unwrap();
                let swapped = vec![fr[1].clone(), fr[0].clone()];
                let sw = f.normalized_volume_form(&p.z, t, 1.0, &swapped, None).unwrap();
                prop_assert!((sw + om).norm() <= 1e-12 * om.norm());
                prop_assume!(a.abs() > 0.1);
                let mixed: Vec<C64> = fr[0].iter().zip(&fr[1]).map(|(x, y)| x * a + y * b).collect();
                let lin = f.normalized_volume_form(&p.z, t, 1.0, &[mixed, fr[1].clone()], None).unwrap();
                prop_assert!((lin - om * a).norm() <= 1e-12 * om.norm() * (1.0 + a.abs() + b.abs()));
                for j in 0..3 {
                    if let Ok(v) = f.normalized_volume_form(&p.z, t, 1.0, &fr, Some(j)) {
                        prop_assert!((v - om).norm() <= 1e-9 * om.norm());
                    }
                }
            }

            #[test]
            fn local_model_tori_have_constant_phase(r in prop::collection::vec(0.2f64..2.0, 2), t in 1e-5f64..1e-1) {
                let f = FamilyChart::local_model(2);
                let mut phase: Option<f64> = None;
                for q in 0..64 {
                    let a = [0.37 * q as f64, 1.3 + 0.91 * q as f64];
                    let w: Vec<C64> = (0..2).map(|k| C64::from_polar(r[k], a[k])).collect();
                    let p = point(&f, &w, t, 0.0);
                    // the angular vector fields of the torus
                    let frame: Vec<Vec<C64>> = (1..3)
                        .map(|k| {
                            let mut v = vec![ZERO; 3];
                            v[k] = p.z[k] * C64::i();
                            v[0] = -p.z[0] * C64::i();
                            v
                        })
                        .collect();
                    let om = f.normalized_volume_form(&p.z, t, 0.0, &frame, None).unwrap();
                    let arg = om.arg();
                    match phase {
                        None => phase = Some(arg),
                        Some(ph) => prop_assert!((arg - ph).abs() <= 1e-10, "{arg} vs {ph}"),
                    }
                }
            }
        }
    }
}
