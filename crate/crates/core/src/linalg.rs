//! Small dense complex linear algebra used in the inner loops.
//!
//! Matrices here are at most 5x5 (one row per chart coordinate), so a plain
//! partially pivoted LU on row-major `Vec`s beats going through nalgebra's
//! dynamic allocation on every flow evaluation.

use num_complex::Complex64;

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        CMat {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C64>]) -> Self {
        let dim = cols.len();
        let mut m = Self::zeros(dim);
        for (j, c) in cols.iter().enumerate() {
            debug_assert_eq!(c.len(), dim);
            for i in 0..dim {
                m[(i, j)] = c[i];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        CMat {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        let d = self.dim;
        let mut out = CMat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).map(|j| self.data[i * d + j] * v[j]).sum())
            .collect()
    }

    pub fn add_scaled(&self, other: &CMat, s: C64) -> CMat {
        CMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn lu(&self) -> Option<Lu> {
        Lu::factor(self)
    }

    pub fn det(&self) -> C64 {
        match self.lu() {
            Some(lu) => lu.det(),
            None => C64::new(0.0, 0.0),
        }
    }

    pub fn inverse(&self) -> Option<CMat> {
        let lu = self.lu()?;
        let d = self.dim;
        let mut inv = CMat::zeros(d);
        for j in 0..d {
            let mut e = vec![C64::new(0.0, 0.0); d];
            e[j] = C64::new(1.0, 0.0);
            let col = lu.solve(&e);
            for i in 0..d {
                inv[(i, j)] = col[i];
            }
        }
        Some(inv)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

/// LU factorisation with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    dim: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn factor(m: &CMat) -> Option<Lu> {
        let d = m.dim;
        let mut lu = m.data.clone();
        let mut perm: Vec<usize> = (0..d).collect();
        let mut sign = 1.0;
        let scale = m.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..d {
            let mut p = k;
            let mut best = lu[k * d + k].norm();
            for i in k + 1..d {
                let v = lu[i * d + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-300 * scale || best == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..d {
                    lu.swap(k * d + j, p * d + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[k * d + k];
            for i in k + 1..d {
                let f = lu[i * d + k] / pivot;
                lu[i * d + k] = f;
                for j in k + 1..d {
                    let v = lu[k * d + j];
                    lu[i * d + j] -= f * v;
                }
            }
        }
        Some(Lu { dim: d, lu, perm, sign })
    }

    pub fn det(&self) -> C64 {
        let d = self.dim;
        let mut p = C64::new(self.sign, 0.0);
        for k in 0..d {
            p *= self.lu[k * d + k];
        }
        p
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let d = self.dim;
        let mut x: Vec<C64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..d {
            for j in 0..i {
                let l = self.lu[i * d + j];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..d).rev() {
            for j in i + 1..d {
                let u = self.lu[i * d + j];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.lu[i * d + i];
        }
        x
    }
}

/// Hermitian inner product `sum_i a_i conj(b_i)`.
pub fn hdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn vnorm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn det_and_inverse_of_small_matrix() {
        let m = CMat {
            dim: 3,
            data: vec![
                c(2.0, 0.0),
                c(0.0, 1.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(1.0, -1.0),
                c(3.0, 0.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.5, 0.5),
            ],
        };
        // cofactor expansion along the first row
        let det = c(2.0, 0.0) * (c(1.0, -1.0) * c(0.5, 0.5) - c(3.0, 0.0) * c(0.0, 0.0))
            - c(0.0, 1.0) * (c(0.0, 0.0) * c(0.5, 0.5) - c(3.0, 0.0) * c(1.0, 0.0))
            + c(1.0, 0.0) * (c(0.0, 0.0) * c(0.0, 0.0) - c(1.0, -1.0) * c(1.0, 0.0));
        assert!((m.det() - det).norm() < 1e-14);
        let inv = m.inverse().unwrap();
        let id = m.mul(&inv);
        assert!(id.add_scaled(&CMat::identity(3), c(-1.0, 0.0)).max_abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_has_no_lu() {
        let m = CMat::from_columns(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.0, 0.0), c(4.0, 0.0)]]);
        assert!(m.lu().is_none());
        assert_eq!(m.det(), c(0.0, 0.0));
    }
}
