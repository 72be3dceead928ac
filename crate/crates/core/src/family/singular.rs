//! Sampling of `C = X_t ∩ Sing(X_0)` on the codimension-two coordinate strata.

use serde::{Deserialize, Serialize};

use super::global::GlobalFamily;
use crate::linalg::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSample {
    /// The stratum `{x_i = x_j = 0}`.
    pub stratum: (usize, usize),
    /// Homogeneous coordinates.
    pub x: Vec<C64>,
    pub residual: f64,
}

/// Roots of `sum_k c_k z^k` (ascending coefficients) by Aberth–Ehrlich
/// iteration followed by Newton polishing.
pub fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let mut c: Vec<C64> = coeffs.to_vec();
    while c.len() > 1 && c.last().map(|v| v.norm() == 0.0).unwrap_or(false) {
        c.pop();
    }
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let monic: Vec<C64> = c.iter().map(|v| v / lead).collect();
    let eval = |z: C64| -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for k in (0..=deg).rev() {
            dp = dp * z + p;
            p = p * z + monic[k];
        }
        (p, dp)
    };
    // Cauchy bound for the initial circle
    let radius = 1.0 + monic[..deg].iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut roots: Vec<C64> = (0..deg)
        .map(|k| C64::from_polar(0.5 * radius, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / deg as f64))
        .collect();
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for i in 0..deg {
            let (p, dp) = eval(roots[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let sum: C64 = (0..deg)
                .filter(|&j| j != i)
                .map(|j| C64::new(1.0, 0.0) / (roots[i] - roots[j]))
                .sum();
            let w = ratio / (C64::new(1.0, 0.0) - ratio * sum);
            roots[i] -= w;
            moved = moved.max(w.norm() / roots[i].norm().max(1.0));
        }
        if moved < 1e-15 {
            break;
        }
    }
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = eval(*r);
            if dp.norm() == 0.0 {
                break;
            }
            *r -= p / dp;
        }
    }
    roots
}

/// Points of `C` for every stratum `{x_i = x_j = 0}`.
///
/// On strata of dimension one the restricted section is a binary form and is
/// solved exactly; on higher-dimensional strata all but one free coordinate
/// are sampled on a polar grid with `density` values per direction.
pub fn singular_set_samples(family: &GlobalFamily, t: f64, density: usize) -> Vec<SingularSample> {
    let _ = t; // C is independent of t: prod x vanishes on every stratum
    let nn = family.ambient_dim();
    let section = family.section();
    let mut out = Vec::new();
    if family.local_model {
        return out;
    }
    for i in 0..=nn {
        for j in i + 1..=nn {
            let rest: Vec<usize> = (0..=nn).filter(|&k| k != i && k != j).collect();
            let terms: Vec<&(Vec<u32>, C64)> = section
                .iter()
                .filter(|(e, _)| e[i] == 0 && e[j] == 0)
                .collect();
            if rest.len() < 2 {
                continue;
            }
            let last = *rest.last().unwrap();
            let free = &rest[1..rest.len() - 1];
            let samples = free_samples(free.len(), density);
            for sample in samples {
                let mut x = vec![C64::new(0.0, 0.0); nn + 1];
                x[rest[0]] = C64::new(1.0, 0.0);
                for (k, v) in free.iter().zip(&sample) {
                    x[*k] = *v;
                }
                let deg = (nn + 1) as usize;
                let mut coeffs = vec![C64::new(0.0, 0.0); deg + 1];
                for (e, c) in &terms {
                    let mut v = *c;
                    for k in 0..=nn {
                        if k != last && e[k] > 0 {
                            v *= x[k].powu(e[k]);
                        }
                    }
                    coeffs[e[last] as usize] += v;
                }
                for r in poly_roots(&coeffs) {
                    let mut p = x.clone();
                    p[last] = r;
                    let res = section_residual(&section, &p);
                    if res <= 1e-10 {
                        out.push(SingularSample {
                            stratum: (i, j),
                            x: p,
                            residual: res,
                        });
                    }
                }
                if coeffs[deg].norm() == 0.0 && coeffs.iter().any(|v| v.norm() > 0.0) {
                    // root at infinity of the dehomogenized form
                    let mut p = vec![C64::new(0.0, 0.0); nn + 1];
                    p[last] = C64::new(1.0, 0.0);
                    let res = section_residual(&section, &p);
                    if res <= 1e-10 && free.is_empty() {
                        out.push(SingularSample {
                            stratum: (i, j),
                            x: p,
                            residual: res,
                        });
                    }
                }
            }
        }
    }
    out
}

fn free_samples(count: usize, density: usize) -> Vec<Vec<C64>> {
    if count == 0 {
        return vec![Vec::new()];
    }
    let d = density.max(2);
    let mut one = Vec::new();
    for a in 0..d {
        for b in 0..d {
            let r = 0.25 + 1.75 * a as f64 / (d - 1) as f64;
            let ph = 2.0 * std::f64::consts::PI * b as f64 / d as f64;
            one.push(C64::from_polar(r, ph));
        }
    }
    let mut out: Vec<Vec<C64>> = vec![Vec::new()];
    for _ in 0..count {
        out = out
            .into_iter()
            .flat_map(|v| {
                one.iter().map(move |z| {
                    let mut w = v.clone();
                    w.push(*z);
                    w
                })
            })
            .collect();
    }
    out
}

/// `|s(x)| / (sum |c_m| |x^{m+1}|)` after normalizing `x` to unit max-norm.
fn section_residual(section: &[(Vec<u32>, C64)], x: &[C64]) -> f64 {
    let mx = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let xs: Vec<C64> = x.iter().map(|v| v / mx).collect();
    let mut val = C64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (e, c) in section {
        let mut v = *c;
        for (k, &ek) in e.iter().enumerate() {
            if ek > 0 {
                v *= xs[k].powu(ek);
            }
        }
        val += v;
        scale += v.norm();
    }
    val.norm() / scale.max(1e-300)
}

/// Fubini–Study moment image `|x_k|^2 / sum |x|^2` of a homogeneous point.
pub fn fs_moment(x: &[C64]) -> Vec<f64> {
    let s: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    x.iter().map(|v| v.norm_sqr() / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_quartic() {
        // z^4 + 1
        let mut c = vec![C64::new(0.0, 0.0); 5];
        c[0] = C64::new(1.0, 0.0);
        c[4] = C64::new(1.0, 0.0);
        let r = poly_roots(&c);
        assert_eq!(r.len(), 4);
        for z in r {
            assert!((z.powu(4) + 1.0).norm() < 1e-13);
        }
    }

    #[test]
    fn fermat_cubic_has_no_singular_points() {
        let f = GlobalFamily::fermat(2).unwrap();
        assert!(singular_set_samples(&f, 1e-2, 4).is_empty());
    }

    #[test]
    fn fermat_quartic_has_24_points() {
        let f = GlobalFamily::fermat(3).unwrap();
        let pts = singular_set_samples(&f, 1e-2, 4);
        assert_eq!(pts.len(), 24);
        let per = |i: usize, j: usize| pts.iter().filter(|p| p.stratum == (i, j)).count();
        assert_eq!(per(2, 3), 4);
        // oracle: roots of x0^4 + x1^4 = 0 have |x0| = |x1|
        for p in pts.iter().filter(|p| p.stratum == (2, 3)) {
            assert!((p.x[0].norm() - p.x[1].norm()).abs() < 1e-12);
        }
        let again = singular_set_samples(&f, 1e-3, 4);
        assert_eq!(pts, again);
    }
}
