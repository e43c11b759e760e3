//! FFT plumbing on the periodic spatial grid.
//!
//! Forward transforms are unnormalised; inverse transforms divide by the
//! number of points. Derivative wavenumbers zero the Nyquist mode of even
//! axes so that spectral derivatives of real fields stay real.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::phase_space::{PhaseGrid, VectorField};

/// Transforms every line of `data` (row-major with `shape`) along `axis`.
pub fn fft_along(data: &mut [Complex64], shape: &[usize], axis: usize, fft: &dyn Fft<f64>) {
    let n = shape[axis];
    if n <= 1 {
        return;
    }
    let stride: usize = shape[axis + 1..].iter().product();
    let block = n * stride;
    data.par_chunks_mut(block).for_each(|chunk| {
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for inner in 0..stride {
            for k in 0..n {
                line[k] = chunk[inner + k * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for k in 0..n {
                chunk[inner + k * stride] = line[k];
            }
        }
    });
}

/// Angular frequencies `2π m / L` in FFT order, `m ∈ [-n/2, n/2)`.
pub fn fft_frequencies(n: usize, length: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let m = if i < n.div_ceil(2) { i as i64 } else { i as i64 - n as i64 };
            2.0 * PI * m as f64 / length
        })
        .collect()
}

/// Like [`fft_frequencies`] but with the Nyquist entry of an even axis set to 0.
pub fn derivative_frequencies(n: usize, length: f64) -> Vec<f64> {
    let mut k = fft_frequencies(n, length);
    if n % 2 == 0 && n > 1 {
        k[n / 2] = 0.0;
    }
    k
}

#[derive(Clone)]
pub struct Spectral {
    dims: [usize; 3],
    freq: [Vec<f64>; 3],
    deriv: [Vec<f64>; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("dims", &self.dims).finish()
    }
}

impl Spectral {
    pub fn new(grid: &PhaseGrid) -> Self {
        let dims = grid.spatial_cells();
        let lengths = grid.spatial_lengths();
        let mut planner = FftPlanner::new();
        Self {
            dims,
            freq: std::array::from_fn(|a| fft_frequencies(dims[a], lengths[a])),
            deriv: std::array::from_fn(|a| derivative_frequencies(dims[a], lengths[a])),
            forward: std::array::from_fn(|a| planner.plan_fft_forward(dims[a])),
            inverse: std::array::from_fn(|a| planner.plan_fft_inverse(dims[a])),
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn multi(&self, i: usize) -> [usize; 3] {
        let n = self.dims;
        [i / (n[1] * n[2]), (i / n[2]) % n[1], i % n[2]]
    }

    /// Angular wavevector of mode `i` (Nyquist kept).
    pub fn wavevector(&self, i: usize) -> [f64; 3] {
        let m = self.multi(i);
        [self.freq[0][m[0]], self.freq[1][m[1]], self.freq[2][m[2]]]
    }

    /// Wavevector used for derivatives (Nyquist zeroed).
    pub fn derivative_wavevector(&self, i: usize) -> [f64; 3] {
        let m = self.multi(i);
        [self.deriv[0][m[0]], self.deriv[1][m[1]], self.deriv[2][m[2]]]
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut data);
        data
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        for a in 0..3 {
            fft_along(data, &self.dims, a, self.forward[a].as_ref());
        }
    }

    /// Inverse transform, normalised, returning the real part.
    pub fn inverse(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        for a in 0..3 {
            fft_along(&mut data, &self.dims, a, self.inverse[a].as_ref());
        }
        let scale = 1.0 / self.len() as f64;
        data.into_iter().map(|c| c.re * scale).collect()
    }

    pub fn forward_vector(&self, field: &VectorField) -> [Vec<Complex64>; 3] {
        std::array::from_fn(|a| self.forward(&field[a]))
    }

    pub fn inverse_vector(&self, field: [Vec<Complex64>; 3]) -> VectorField {
        let [a, b, c] = field;
        [self.inverse(a), self.inverse(b), self.inverse(c)]
    }

    /// Spectral divergence.
    pub fn divergence(&self, field: &VectorField) -> Vec<f64> {
        let hat = self.forward_vector(field);
        let out: Vec<Complex64> = (0..self.len())
            .map(|i| {
                let k = self.derivative_wavevector(i);
                Complex64::i() * (k[0] * hat[0][i] + k[1] * hat[1][i] + k[2] * hat[2][i])
            })
            .collect();
        self.inverse(out)
    }

    /// Spectral curl.
    pub fn curl(&self, field: &VectorField) -> VectorField {
        let hat = self.forward_vector(field);
        let mut out: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); self.len()]);
        for i in 0..self.len() {
            let k = self.derivative_wavevector(i);
            let v = [hat[0][i], hat[1][i], hat[2][i]];
            out[0][i] = Complex64::i() * (k[1] * v[2] - k[2] * v[1]);
            out[1][i] = Complex64::i() * (k[2] * v[0] - k[0] * v[2]);
            out[2][i] = Complex64::i() * (k[0] * v[1] - k[1] * v[0]);
        }
        self.inverse_vector(out)
    }

    /// Spectral gradient.
    pub fn gradient(&self, values: &[f64]) -> VectorField {
        let hat = self.forward(values);
        let comps: [Vec<Complex64>; 3] = std::array::from_fn(|a| {
            (0..self.len())
                .map(|i| Complex64::i() * self.derivative_wavevector(i)[a] * hat[i])
                .collect()
        });
        self.inverse_vector(comps)
    }
}
