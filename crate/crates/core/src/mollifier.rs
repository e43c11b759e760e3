//! The mollifier `d`, its rescalings `d_n(x) = n³ d(n x)` and spectral
//! convolution on the torus.
//!
//! `d` is the radial bump `c · exp(-1/(1-|x|²))` on the unit ball. On a
//! periodic grid, convolution with `d_n` is multiplication of each Fourier
//! mode `k` by `d̂(k/n)`, which is real and at most 1 in modulus since `d`
//! is an even probability density.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::cutoff::bump;
use crate::numerics::integrate;
use crate::phase_space::{PhaseGrid, VectorField};
use crate::spectral::Spectral;
use crate::{Error, Result};

const QUADRATURE_TOL: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq)]
pub struct MollifierKernel {
    normalization: f64,
}

impl Default for MollifierKernel {
    fn default() -> Self {
        Self::new()
    }
}

impl MollifierKernel {
    /// Builds the normalised bump; the constant comes from adaptive
    /// quadrature of `4π ∫₀¹ r² exp(-1/(1-r²)) dr`.
    pub fn new() -> Self {
        let mass = 4.0 * PI * integrate(|r| r * r * bump(r), 0.0, 1.0, QUADRATURE_TOL);
        Self {
            normalization: 1.0 / mass,
        }
    }

    pub fn normalization_constant(&self) -> f64 {
        self.normalization
    }

    /// Radial profile `d(r)`.
    pub fn profile(&self, r: f64) -> f64 {
        self.normalization * bump(r)
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.profile((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())
    }

    /// `d̂(κ) = 4π ∫₀¹ r² d(r) sin(κr)/(κr) dr` for `|k| = κ`.
    pub fn fourier(&self, kappa: f64) -> f64 {
        let kappa = kappa.abs();
        if kappa == 0.0 {
            return 1.0;
        }
        let sinc = |x: f64| if x.abs() < 1e-4 { 1.0 - x * x / 6.0 } else { x.sin() / x };
        4.0 * PI * integrate(|r| r * r * self.profile(r) * sinc(kappa * r), 0.0, 1.0, QUADRATURE_TOL)
    }
}

#[derive(Clone, Debug)]
pub struct ScaledMollifier {
    base: MollifierKernel,
    n: u32,
    multiplier: Vec<f64>,
    spectral: Spectral,
}

impl ScaledMollifier {
    /// Tabulates `d̂_n(k) = d̂(k/n)` on the Fourier modes of `grid`.
    pub fn new(base: &MollifierKernel, n: i64, grid: &PhaseGrid) -> Result<Self> {
        if n <= 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: format!("mollifier scale must be positive, got {n}"),
            });
        }
        let spectral = Spectral::new(grid);
        let dx = grid.dx();
        let cells = grid.spatial_cells();
        let coarsest = (0..3).filter(|&a| cells[a] > 1).map(|a| dx[a]).fold(0.0, f64::max);
        if 1.0 / (n as f64) <= coarsest {
            log::warn!(
                "mollifier radius 1/{n} is not resolved by cell size {coarsest:.4}; \
                 using the spectral representation only"
            );
        }
        let mut cache: HashMap<u64, f64> = HashMap::new();
        let multiplier = (0..spectral.len())
            .map(|i| {
                let k = spectral.wavevector(i);
                let kappa = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt() / n as f64;
                *cache.entry(kappa.to_bits()).or_insert_with(|| base.fourier(kappa))
            })
            .collect();
        Ok(Self {
            base: base.clone(),
            n: n as u32,
            multiplier,
            spectral,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn base(&self) -> &MollifierKernel {
        &self.base
    }

    /// `d̂_n` in FFT mode order.
    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// `d_n(x) = n³ d(n x)`.
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let n = self.n as f64;
        n * n * n * self.base.eval([n * x[0], n * x[1], n * x[2]])
    }

    /// `d_n ∗ g` (`times = 1`) or `d_n ∗ d_n ∗ g` (`times = 2`).
    pub fn convolve(&self, g: &[f64], times: u32) -> Result<Vec<f64>> {
        if g.len() != self.multiplier.len() {
            return Err(Error::ShapeMismatch {
                expected: self.multiplier.len(),
                actual: g.len(),
            });
        }
        if !(1..=2).contains(&times) {
            return Err(Error::InvalidParameter {
                name: "times",
                reason: format!("convolution power must be 1 or 2, got {times}"),
            });
        }
        let mut hat = self.spectral.forward(g);
        for (c, &m) in hat.iter_mut().zip(&self.multiplier) {
            *c *= if times == 1 { m } else { m * m };
        }
        Ok(self.spectral.inverse(hat))
    }

    pub fn convolve_vector(&self, g: &VectorField, times: u32) -> Result<VectorField> {
        Ok([
            self.convolve(&g[0], times)?,
            self.convolve(&g[1], times)?,
            self.convolve(&g[2], times)?,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PhaseGrid {
        PhaseGrid::new([16, 8, 1], [2.0 * PI, 2.0 * PI, 1.0], [1, 1, 1], 1.0).unwrap()
    }

    #[test]
    fn kernel_support_and_parity() {
        let d = MollifierKernel::new();
        assert_eq!(d.eval([1.0, 0.0, 0.0]), 0.0);
        assert_eq!(d.eval([0.6, 0.9, 0.0]), 0.0);
        assert!(d.eval([0.0; 3]) > 0.0);
        for x in [[0.1, -0.3, 0.2], [0.5, 0.5, 0.1], [-0.7, 0.0, 0.01]] {
            assert_eq!(d.eval(x), d.eval([-x[0], -x[1], -x[2]]));
        }
    }

    #[test]
    fn multiplier_properties() {
        let d = MollifierKernel::new();
        let g = grid();
        let m = ScaledMollifier::new(&d, 3, &g).unwrap();
        assert_eq!(m.multiplier()[0], 1.0);
        assert!(m.multiplier().iter().all(|v| v.abs() <= 1.0));
        let coarse = ScaledMollifier::new(&d, 2, &g).unwrap();
        let fine = ScaledMollifier::new(&d, 64, &g).unwrap();
        for i in 1..g.n_x() {
            assert!((1.0 - fine.multiplier()[i]).abs() <= (1.0 - coarse.multiplier()[i]).abs());
            assert!((1.0 - fine.multiplier()[i]).abs() < 0.01);
        }
        assert!(ScaledMollifier::new(&d, 0, &g).is_err());
        assert!(ScaledMollifier::new(&d, -2, &g).is_err());
    }

    #[test]
    fn convolution_of_constants_and_modes() {
        let d = MollifierKernel::new();
        let g = grid();
        let m = ScaledMollifier::new(&d, 2, &g).unwrap();
        let constant = vec![2.5; g.n_x()];
        for times in [1, 2] {
            let out = m.convolve(&constant, times).unwrap();
            assert!(out.iter().all(|v| (v - 2.5).abs() < 1e-14));
        }
        let k0 = 2.0;
        let wave: Vec<f64> = (0..g.n_x()).map(|i| (k0 * g.x_coord(i)[0]).cos()).collect();
        let factor = d.fourier(k0 / 2.0);
        for times in [1, 2] {
            let out = m.convolve(&wave, times).unwrap();
            let f = factor.powi(times as i32);
            for (o, w) in out.iter().zip(&wave) {
                assert!((o - f * w).abs() < 1e-14);
            }
        }
        assert!(m.convolve(&wave, 3).is_err());
        assert!(m.convolve(&wave[1..], 1).is_err());
    }

    #[test]
    fn scaled_kernel_matches_definition() {
        let d = MollifierKernel::new();
        let m = ScaledMollifier::new(&d, 4, &grid()).unwrap();
        assert_eq!(m.eval([0.3, 0.0, 0.0]), 0.0);
        assert!((m.eval([0.1, 0.0, 0.0]) - 64.0 * d.eval([0.4, 0.0, 0.0])).abs() < 1e-12);
    }
}
