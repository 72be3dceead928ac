//! Sparse complex polynomials in chart coordinates.

use serde::{Deserialize, Serialize};

use crate::linalg::{CMat, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exponent: Vec<u32>,
    pub coeff: C64,
}

/// `sum_j c_j z^{m_j}`, evaluated by direct summation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsePoly {
    pub vars: usize,
    pub terms: Vec<Monomial>,
}

impl SparsePoly {
    pub fn zero(vars: usize) -> Self {
        SparsePoly {
            vars,
            terms: Vec::new(),
        }
    }

    /// Adds `coeff z^exponent`, merging equal exponents and dropping zeros.
    pub fn add_term(&mut self, exponent: Vec<u32>, coeff: C64) {
        assert_eq!(exponent.len(), self.vars);
        if let Some(t) = self.terms.iter_mut().find(|t| t.exponent == exponent) {
            t.coeff += coeff;
        } else {
            self.terms.push(Monomial { exponent, coeff });
        }
        self.terms.retain(|t| t.coeff != C64::new(0.0, 0.0));
    }

    /// `sum_k z_k^d`.
    pub fn fermat(vars: usize, degree: u32) -> Self {
        let mut p = Self::zero(vars);
        for k in 0..vars {
            let mut e = vec![0; vars];
            e[k] = degree;
            p.add_term(e, C64::new(1.0, 0.0));
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exponent.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn constant_term(&self) -> C64 {
        self.terms
            .iter()
            .filter(|t| t.exponent.iter().all(|&e| e == 0))
            .map(|t| t.coeff)
            .sum()
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        self.terms.iter().map(|t| t.coeff * monomial(&t.exponent, z)).sum()
    }

    /// Value and holomorphic gradient.
    pub fn eval_grad(&self, z: &[C64]) -> (C64, Vec<C64>) {
        let mut grad = vec![C64::new(0.0, 0.0); self.vars];
        let mut val = C64::new(0.0, 0.0);
        for t in &self.terms {
            val += t.coeff * monomial(&t.exponent, z);
            for a in 0..self.vars {
                if t.exponent[a] == 0 {
                    continue;
                }
                let mut v = t.coeff * t.exponent[a] as f64;
                for (k, zk) in z.iter().enumerate() {
                    let e = if k == a { t.exponent[k] - 1 } else { t.exponent[k] };
                    if e > 0 {
                        v *= zk.powu(e);
                    }
                }
                grad[a] += v;
            }
        }
        (val, grad)
    }

    /// Holomorphic Hessian `d^2 p / dz_a dz_b`.
    pub fn hessian(&self, z: &[C64]) -> CMat {
        let d = self.vars;
        let mut h = CMat::zeros(d);
        for t in &self.terms {
            for a in 0..d {
                for b in 0..d {
                    let mut e: Vec<i64> = t.exponent.iter().map(|&v| v as i64).collect();
                    let mut c = t.coeff * e[a] as f64;
                    e[a] -= 1;
                    c *= e[b] as f64;
                    e[b] -= 1;
                    if c == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut v = c;
                    for (k, zk) in z.iter().enumerate() {
                        if e[k] > 0 {
                            v *= zk.powu(e[k] as u32);
                        }
                    }
                    h[(a, b)] += v;
                }
            }
        }
        h
    }
}

fn monomial(e: &[u32], z: &[C64]) -> C64 {
    let mut v = C64::new(1.0, 0.0);
    for (k, &ek) in e.iter().enumerate() {
        if ek > 0 {
            v *= z[k].powu(ek);
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_and_hessian_match_differences() {
        let mut p = SparsePoly::fermat(2, 3);
        p.add_term(vec![1, 2], C64::new(0.5, -0.25));
        let z = vec![C64::new(0.3, 0.2), C64::new(-0.4, 0.7)];
        let (_, g) = p.eval_grad(&z);
        let h = p.hessian(&z);
        let eps = 1e-6;
        for a in 0..2 {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[a] += eps;
            zm[a] -= eps;
            let fd = (p.eval(&zp) - p.eval(&zm)) / (2.0 * eps);
            assert!((fd - g[a]).norm() < 1e-8);
            let (_, gp) = p.eval_grad(&zp);
            let (_, gm) = p.eval_grad(&zm);
            for b in 0..2 {
                let fd = (gp[b] - gm[b]) / (2.0 * eps);
                assert!((fd - h[(b, a)]).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn merging_cancels_terms() {
        let mut p = SparsePoly::zero(2);
        p.add_term(vec![1, 0], C64::new(1.0, 0.0));
        p.add_term(vec![1, 0], C64::new(-1.0, 0.0));
        assert!(p.is_zero());
    }
}
