//! Two-dimensional FFTs on the `N × N` torus `[0, 2π)²`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{domain, Result};

/// Row-major `N × N` complex transform. Row index is `y`, column index `x`.
#[derive(Clone)]
pub struct Fft2 {
    pub n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({})", self.n)
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return domain(format!("spectral grid size must be a power of two >= 4, got {n}"));
        }
        let mut p = FftPlanner::new();
        Ok(Self {
            n,
            fwd: p.plan_fft_forward(n),
            inv: p.plan_fft_inverse(n),
        })
    }

    fn rows(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        data.par_chunks_mut(n * 16).for_each(|block| {
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            for row in block.chunks_mut(n) {
                plan.process_with_scratch(row, &mut scratch);
            }
        });
    }

    fn transpose(&self, data: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            for j in i + 1..n {
                data.swap(i * n + j, j * n + i);
            }
        }
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n * self.n);
        self.rows(data, &self.fwd);
        self.transpose(data);
        self.rows(data, &self.fwd);
        self.transpose(data);
    }

    /// Inverse transform in place, normalized by `1/N²`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n * self.n);
        self.rows(data, &self.inv);
        self.transpose(data);
        self.rows(data, &self.inv);
        self.transpose(data);
        let s = 1.0 / (self.n * self.n) as f64;
        data.par_iter_mut().for_each(|v| *v *= s);
    }

    pub fn forward_real(&self, v: &[f64]) -> Vec<Complex64> {
        let mut d: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut d);
        d
    }

    /// Inverse of a Hermitian spectrum; the imaginary residue is dropped.
    pub fn inverse_real(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut d = spec.to_vec();
        self.inverse(&mut d);
        d.into_iter().map(|c| c.re).collect()
    }

    /// Inverts two Hermitian spectra with one complex transform.
    pub fn inverse_real_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut d: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + i * y).collect();
        self.inverse(&mut d);
        d.into_iter().map(|c| (c.re, c.im)).unzip()
    }

    /// Signed wavenumber of index `i`; the Nyquist index maps to `−N/2`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        let n = self.n;
        if i < n / 2 {
            i as f64
        } else {
            i as f64 - n as f64
        }
    }

    /// `(k_x, k_y)` of flat index `idx`.
    #[inline]
    pub fn k_of(&self, idx: usize) -> (f64, f64) {
        (self.wavenumber(idx % self.n), self.wavenumber(idx / self.n))
    }

    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let h = self.n / 2;
        idx % self.n == h || idx / self.n == h
    }

    /// Two-thirds rule mask: keeps `|k_x|, |k_y| < N/3`.
    pub fn dealias_mask(&self) -> Vec<bool> {
        let cut = self.n as f64 / 3.0;
        (0..self.n * self.n)
            .map(|idx| {
                let (kx, ky) = self.k_of(idx);
                kx.abs() < cut && ky.abs() < cut
            })
            .collect()
    }
}

/// Spectral divergence `max |i k · û| / max(|k||û|)` of a periodic vector field.
pub fn relative_divergence(fft: &Fft2, u: &[f64], v: &[f64]) -> f64 {
    let uh = fft.forward_real(u);
    let vh = fft.forward_real(v);
    let mut div = 0.0f64;
    let mut grad = 0.0f64;
    for idx in 0..uh.len() {
        if fft.is_nyquist(idx) {
            continue;
        }
        let (kx, ky) = fft.k_of(idx);
        div = div.max((kx * uh[idx] + ky * vh[idx]).norm());
        grad = grad.max((kx * kx + ky * ky).sqrt() * uh[idx].norm().hypot(vh[idx].norm()));
    }
    if grad == 0.0 {
        0.0
    } else {
        div / grad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_lands_in_one_bin() {
        let n = 16;
        let f = Fft2::new(n).unwrap();
        let h = 2.0 * PI / n as f64;
        let v: Vec<f64> = (0..n * n).map(|k| (3.0 * (k % n) as f64 * h).cos()).collect();
        let s = f.forward_real(&v);
        for (idx, c) in s.iter().enumerate() {
            let (kx, ky) = f.k_of(idx);
            let expect = if ky == 0.0 && kx.abs() == 3.0 {
                (n * n) as f64 / 2.0
            } else {
                0.0
            };
            assert!((c.re - expect).abs() < 1e-9 && c.im.abs() < 1e-9);
        }
        let back = f.inverse_real(&s);
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn pair_inverse_matches_two_inverses() {
        let n = 8;
        let f = Fft2::new(n).unwrap();
        let a: Vec<f64> = (0..n * n).map(|k| (k as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..n * n).map(|k| (k as f64 * 0.11).cos()).collect();
        let (x, y) = f.inverse_real_pair(&f.forward_real(&a), &f.forward_real(&b));
        for k in 0..n * n {
            assert!((x[k] - a[k]).abs() < 1e-12 && (y[k] - b[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Fft2::new(12).is_err());
    }
}
