//! Tensor Fourier grids on the n-torus and real mean-zero Fourier fields.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::linalg::C64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Uniform tensor grid with `size` points per circle, row-major (last axis fastest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub size: usize,
}

impl Grid {
    pub fn new(dim: usize, size: usize) -> Self {
        assert!(dim >= 1 && size >= 4 && size.is_power_of_two(), "grid size must be a power of two");
        Grid { dim, size }
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.size;
            idx /= self.size;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &m| acc * self.size + m)
    }

    pub fn theta(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .map(|&k| 2.0 * PI * k as f64 / self.size as f64)
            .collect()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.size as f64
    }

    /// Signed frequency of FFT index `k`; the Nyquist index maps to `+N/2`.
    pub fn freq(&self, k: usize) -> i64 {
        let n = self.size as i64;
        let k = k as i64;
        if k <= n / 2 {
            k
        } else {
            k - n
        }
    }

    pub fn is_nyquist(&self, multi: &[usize]) -> bool {
        multi.iter().any(|&k| k == self.size / 2)
    }

    /// Frequency vectors in FFT order.
    pub fn frequencies(&self) -> Vec<Vec<i64>> {
        (0..self.len())
            .map(|i| self.multi_index(i).iter().map(|&k| self.freq(k)).collect())
            .collect()
    }

    /// Same grid with twice the resolution.
    pub fn refined(&self) -> Grid {
        Grid::new(self.dim, self.size * 2)
    }
}

/// In-place n-dimensional FFT (unnormalized) along every axis.
pub fn fft_nd(grid: Grid, data: &mut [C64], inverse: bool) {
    let n = grid.size;
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    let mut line = vec![C64::new(0.0, 0.0); n];
    for axis in 0..grid.dim {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        let block = stride * n;
        for start in 0..data.len() / n {
            let outer = start / stride;
            let inner = start % stride;
            let base = outer * block + inner;
            for k in 0..n {
                line[k] = data[base + k * stride];
            }
            fft.process(&mut line);
            for k in 0..n {
                data[base + k * stride] = line[k];
            }
        }
    }
}

/// Normalized spectrum `FFT(values) / N^n` of complex grid values.
pub fn spectrum(grid: Grid, values: &[C64]) -> Vec<C64> {
    let mut d = values.to_vec();
    fft_nd(grid, &mut d, false);
    let s = 1.0 / grid.len() as f64;
    d.iter_mut().for_each(|v| *v *= s);
    d
}

/// Grid values of a normalized spectrum.
pub fn synthesize(grid: Grid, coeffs: &[C64]) -> Vec<C64> {
    let mut d = coeffs.to_vec();
    fft_nd(grid, &mut d, true);
    d
}

/// Spectral derivative along the given axes of complex grid values; the
/// Nyquist mode is dropped.
pub fn derivative_complex(grid: Grid, values: &[C64], axes: &[usize]) -> Vec<C64> {
    let mut c = spectrum(grid, values);
    apply_derivative(grid, &mut c, axes);
    synthesize(grid, &c)
}

fn apply_derivative(grid: Grid, c: &mut [C64], axes: &[usize]) {
    for (i, v) in c.iter_mut().enumerate() {
        let m = grid.multi_index(i);
        if grid.is_nyquist(&m) {
            *v = C64::new(0.0, 0.0);
            continue;
        }
        for &a in axes {
            *v *= C64::new(0.0, grid.freq(m[a]) as f64);
        }
    }
}

/// Fraction of spectral energy in the top third of frequencies (any axis
/// with `|m| > N/3`).
pub fn top_third_fraction(grid: Grid, coeffs: &[C64]) -> f64 {
    let cut = grid.size as i64 / 3;
    let mut top = 0.0;
    let mut total = 0.0;
    for (i, v) in coeffs.iter().enumerate() {
        let e = v.norm_sqr();
        total += e;
        if grid.multi_index(i).iter().any(|&k| grid.freq(k).abs() > cut) {
            top += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        top / total
    }
}

/// Real mean-zero field stored as its normalized spectrum in FFT order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierField {
    pub grid: Grid,
    pub coeffs: Vec<C64>,
}

impl FourierField {
    pub fn zeros(grid: Grid) -> Self {
        FourierField {
            grid,
            coeffs: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Projects real grid values onto the admissible space: mean and
    /// Nyquist modes removed.
    pub fn from_grid(grid: Grid, values: &[f64]) -> Self {
        let v: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        let mut coeffs = spectrum(grid, &v);
        for (i, c) in coeffs.iter_mut().enumerate() {
            let m = grid.multi_index(i);
            if i == 0 || grid.is_nyquist(&m) {
                *c = C64::new(0.0, 0.0);
            }
        }
        let mut f = FourierField { grid, coeffs };
        f.symmetrize();
        f
    }

    /// Field `sum amp * cos(m . theta + phase)` for the given modes.
    pub fn from_modes(grid: Grid, modes: &[(Vec<i64>, f64, f64)]) -> Self {
        let vals: Vec<f64> = (0..grid.len())
            .map(|i| {
                let th = grid.theta(i);
                modes
                    .iter()
                    .map(|(m, a, ph)| {
                        let arg: f64 = m.iter().zip(&th).map(|(k, t)| *k as f64 * t).sum();
                        a * (arg + ph).cos()
                    })
                    .sum()
            })
            .collect();
        Self::from_grid(grid, &vals)
    }

    /// Enforces exact Hermitian symmetry `c(-m) = conj c(m)`.
    pub fn symmetrize(&mut self) {
        let g = self.grid;
        let n = g.size;
        let old = self.coeffs.clone();
        for i in 0..g.len() {
            let m = g.multi_index(i);
            let neg: Vec<usize> = m.iter().map(|&k| (n - k) % n).collect();
            let j = g.flat_index(&neg);
            self.coeffs[i] = 0.5 * (old[i] + old[j].conj());
        }
        self.coeffs[0] = C64::new(0.0, 0.0);
    }

    pub fn to_grid(&self) -> Vec<f64> {
        synthesize(self.grid, &self.coeffs).iter().map(|v| v.re).collect()
    }

    /// Spectral derivative along `axes` (repeated axes give higher derivatives).
    pub fn derivative(&self, axes: &[usize]) -> Vec<f64> {
        let mut c = self.coeffs.clone();
        apply_derivative(self.grid, &mut c, axes);
        synthesize(self.grid, &c).iter().map(|v| v.re).collect()
    }

    /// Gradient grids, one per axis.
    pub fn gradient(&self) -> Vec<Vec<f64>> {
        (0..self.grid.dim).map(|a| self.derivative(&[a])).collect()
    }

    /// Hessian grids indexed `[a][b]`.
    pub fn hessian(&self) -> Vec<Vec<Vec<f64>>> {
        let d = self.grid.dim;
        let mut out = vec![vec![Vec::new(); d]; d];
        for a in 0..d {
            for b in a..d {
                let v = self.derivative(&[a, b]);
                out[b][a] = v.clone();
                out[a][b] = v;
            }
        }
        out
    }

    /// Trigonometric interpolant at an arbitrary angle.
    pub fn eval(&self, theta: &[f64]) -> f64 {
        let g = self.grid;
        let mut s = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let arg: f64 = g
                .multi_index(i)
                .iter()
                .zip(theta)
                .map(|(&k, t)| g.freq(k) as f64 * t)
                .sum();
            s += (c * C64::from_polar(1.0, arg)).re;
        }
        s
    }

    /// Gradient of the interpolant at an arbitrary angle.
    pub fn eval_gradient(&self, theta: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let mut out = vec![0.0; g.dim];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let m: Vec<f64> = g.multi_index(i).iter().map(|&k| g.freq(k) as f64).collect();
            let arg: f64 = m.iter().zip(theta).map(|(k, t)| k * t).sum();
            let v = c * C64::from_polar(1.0, arg) * C64::new(0.0, 1.0);
            for a in 0..g.dim {
                out[a] += v.re * m[a];
            }
        }
        out
    }

    pub fn axpy(&self, alpha: f64, other: &FourierField) -> FourierField {
        FourierField {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * alpha)
                .collect(),
        }
    }

    pub fn scaled(&self, alpha: f64) -> FourierField {
        FourierField {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|a| a * alpha).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn sup_norm(&self) -> f64 {
        self.to_grid().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Re-samples onto another grid by zero padding or truncation.
    pub fn resample(&self, grid: Grid) -> FourierField {
        let mut out = FourierField::zeros(grid);
        for (i, c) in self.coeffs.iter().enumerate() {
            let m: Vec<i64> = self.grid.multi_index(i).iter().map(|&k| self.grid.freq(k)).collect();
            if m.iter().any(|&k| k.abs() >= grid.size as i64 / 2) {
                continue;
            }
            let idx: Vec<usize> = m
                .iter()
                .map(|&k| k.rem_euclid(grid.size as i64) as usize)
                .collect();
            out.coeffs[grid.flat_index(&idx)] = *c;
        }
        out
    }

    /// Interleaved `re, im` coefficients in FFT order.
    pub fn interleaved(&self) -> Vec<f64> {
        self.coeffs.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn from_interleaved(grid: Grid, data: &[f64]) -> Option<Self> {
        if data.len() != 2 * grid.len() {
            return None;
        }
        Some(FourierField {
            grid,
            coeffs: data.chunks(2).map(|c| C64::new(c[0], c[1])).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_round_trip_2d() {
        let g = Grid::new(2, 8);
        let vals: Vec<C64> = (0..g.len()).map(|i| C64::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let back = synthesize(g, &spectrum(g, &vals));
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn derivative_of_cosine() {
        let g = Grid::new(2, 16);
        let f = FourierField::from_modes(g, &[(vec![2, -1], 0.3, 0.2)]);
        let d = f.derivative(&[0]);
        let dd = f.derivative(&[0, 1]);
        for i in 0..g.len() {
            let th = g.theta(i);
            let arg = 2.0 * th[0] - th[1] + 0.2;
            assert!((d[i] + 0.6 * arg.sin()).abs() < 1e-13);
            assert!((dd[i] - 0.6 * arg.cos()).abs() < 1e-13);
        }
        let th = [0.37, 1.91];
        assert!((f.eval(&th) - 0.3 * (2.0 * th[0] - th[1] + 0.2).cos()).abs() < 1e-13);
    }

    #[test]
    fn projection_removes_mean_and_nyquist() {
        let g = Grid::new(1, 8);
        let vals: Vec<f64> = (0..8).map(|i| 1.0 + if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let f = FourierField::from_grid(g, &vals);
        assert!(f.coeffs.iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn resample_preserves_low_modes() {
        let g = Grid::new(2, 8);
        let f = FourierField::from_modes(g, &[(vec![1, 2], 0.5, 0.0)]);
        let h = f.resample(g.refined()).resample(g);
        assert_eq!(f, h);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        fn field(dim: usize, size: usize, seed: u64) -> FourierField {
            let g = Grid::new(dim, size);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            FourierField::from_grid(g, &vals)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn admissible_fields_are_hermitian(dim in 1usize..=3, size in prop::sample::select(vec![4usize, 8, 16]), seed: u64) {
                let f = field(dim, size, seed);
                let g = f.grid;
                prop_assert_eq!(f.coeffs[0], C64::new(0.0, 0.0));
                for i in 0..g.len() {
                    let neg: Vec<usize> = g.multi_index(i).iter().map(|&k| (size - k) % size).collect();
                    prop_assert_eq!(f.coeffs[i], f.coeffs[g.flat_index(&neg)].conj());
                }
                let back = synthesize(g, &f.coeffs);
                let scale = back.iter().map(|v| v.norm()).fold(1e-300, f64::max);
                prop_assert!(back.iter().all(|v| v.im.abs() <= 1e-13 * scale));
            }

            #[test]
            fn stored_values_have_zero_mean(dim in 1usize..=3, size in prop::sample::select(vec![4usize, 8, 16]), seed: u64, amp in 1e-3f64..1e3) {
                let f = field(dim, size, seed).scaled(amp);
                let vals = f.to_grid();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let sup = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                prop_assert!(mean.abs() <= 1e-14 * sup.max(1.0));
                prop_assert!(f.mean().abs() <= 1e-14 * sup.max(1.0));
            }

            #[test]
            fn interleaved_round_trip(dim in 1usize..=2, seed: u64) {
                let f = field(dim, 8, seed);
                prop_assert_eq!(FourierField::from_interleaved(f.grid, &f.interleaved()), Some(f));
            }
        }
    }
}
