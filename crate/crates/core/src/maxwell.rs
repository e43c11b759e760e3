//! Tilde-field Maxwell evolution on the torus.
//!
//! The evolved unknowns are `(Ẽ, B̃)`; the physical fields seen by the
//! particles are `E = d_n ∗ Ẽ`, `B = d_n ∗ B̃` and are recomputed after every
//! update. Each Fourier mode is advanced by the exact vacuum rotation at
//! frequency `|k|`, with the current entering as a midpoint kick. The Gauss
//! law carries a neutralising background `ρ̄` so it is solvable on a torus.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::mollifier::ScaledMollifier;
use crate::numerics::pairwise_sum;
use crate::phase_space::{zero_vector_field, PhaseGrid, VectorField};
use crate::spectral::Spectral;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    /// The evolved fields `Ẽ, B̃`.
    Tilde,
    /// The mollified fields `E = d_n ∗ Ẽ`, `B = d_n ∗ B̃`.
    Mollified,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub e_tilde: VectorField,
    pub b_tilde: VectorField,
    pub e: VectorField,
    pub b: VectorField,
    pub time: f64,
    pub background_density: f64,
}

impl FieldState {
    pub fn electric(&self, kind: FieldKind) -> &VectorField {
        match kind {
            FieldKind::Tilde => &self.e_tilde,
            FieldKind::Mollified => &self.e,
        }
    }

    pub fn magnetic(&self, kind: FieldKind) -> &VectorField {
        match kind {
            FieldKind::Tilde => &self.b_tilde,
            FieldKind::Mollified => &self.b,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintResidual {
    /// `div E - 4π(ρ - ρ̄)` per cell.
    pub gauss: Vec<f64>,
    /// `div B` per cell.
    pub div_b: Vec<f64>,
    pub gauss_norm: f64,
    pub div_b_norm: f64,
}

type Modes = [Vec<Complex64>; 3];

#[derive(Clone, Debug)]
pub struct MaxwellSolver {
    mollifier: ScaledMollifier,
    x_volume: f64,
    min_dx: f64,
}

fn l2(values: &[f64], weight: f64) -> f64 {
    (pairwise_sum(&values.iter().map(|v| v * v).collect::<Vec<_>>()) * weight).sqrt()
}

fn check_finite(field: &VectorField, what: &'static str) -> Result<()> {
    if field.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

impl MaxwellSolver {
    pub fn new(grid: &PhaseGrid, mollifier: ScaledMollifier) -> Self {
        let dx = grid.dx();
        let cells = grid.spatial_cells();
        let min_dx = (0..3)
            .filter(|&a| cells[a] > 1)
            .map(|a| dx[a])
            .fold(f64::INFINITY, f64::min);
        Self {
            mollifier,
            x_volume: grid.x_volume(),
            min_dx,
        }
    }

    pub fn mollifier(&self) -> &ScaledMollifier {
        &self.mollifier
    }

    pub fn spectral(&self) -> &Spectral {
        self.mollifier.spectral()
    }

    fn len(&self) -> usize {
        self.spectral().len()
    }

    /// Builds a state from tilde fields, deriving the mollified pair.
    pub fn assemble(
        &self,
        e_tilde: VectorField,
        b_tilde: VectorField,
        time: f64,
        background_density: f64,
    ) -> Result<FieldState> {
        let e = self.mollifier.convolve_vector(&e_tilde, 1)?;
        let b = self.mollifier.convolve_vector(&b_tilde, 1)?;
        Ok(FieldState {
            e_tilde,
            b_tilde,
            e,
            b,
            time,
            background_density,
        })
    }

    /// Advances `(Ẽ, B̃)` by `dt` with current `j_mollified` (already `d_n ∗ j`).
    pub fn step(&self, state: &FieldState, j_mollified: &VectorField, dt: f64) -> Result<FieldState> {
        if !dt.is_finite() {
            return Err(Error::NonFinite("time step"));
        }
        check_finite(&state.e_tilde, "electric field")?;
        check_finite(&state.b_tilde, "magnetic field")?;
        check_finite(j_mollified, "current")?;
        for c in j_mollified {
            if c.len() != self.len() {
                return Err(Error::ShapeMismatch {
                    expected: self.len(),
                    actual: c.len(),
                });
            }
        }
        if dt.abs() > self.min_dx {
            log::warn!("time step {dt} exceeds the spatial cell size {}", self.min_dx);
        }
        let spectral = self.spectral();
        let mut e_hat = spectral.forward_vector(&state.e_tilde);
        let mut b_hat = spectral.forward_vector(&state.b_tilde);
        let j_hat = spectral.forward_vector(j_mollified);
        let four_pi = 4.0 * PI;
        for i in 0..self.len() {
            let k = spectral.derivative_wavevector(i);
            let e = [e_hat[0][i], e_hat[1][i], e_hat[2][i]];
            let b = [b_hat[0][i], b_hat[1][i], b_hat[2][i]];
            let j = [j_hat[0][i], j_hat[1][i], j_hat[2][i]];
            let (e_new, b_new) = advance_mode(k, e, b, j, dt, four_pi);
            for a in 0..3 {
                e_hat[a][i] = e_new[a];
                b_hat[a][i] = b_new[a];
            }
        }
        self.from_modes(e_hat, b_hat, state.time + dt, state.background_density)
    }

    fn from_modes(&self, e_hat: Modes, b_hat: Modes, time: f64, background_density: f64) -> Result<FieldState> {
        let spectral = self.spectral();
        let m = self.mollifier.multiplier();
        let smooth = |modes: &Modes| -> Modes {
            std::array::from_fn(|a| modes[a].iter().zip(m).map(|(c, &w)| c * w).collect())
        };
        let e_moll = smooth(&e_hat);
        let b_moll = smooth(&b_hat);
        Ok(FieldState {
            e_tilde: spectral.inverse_vector(e_hat),
            b_tilde: spectral.inverse_vector(b_hat),
            e: spectral.inverse_vector(e_moll),
            b: spectral.inverse_vector(b_moll),
            time,
            background_density,
        })
    }

    /// `div E - 4π(ρ - ρ̄)` and `div B` for the selected pair of fields.
    pub fn constraint_residual(&self, state: &FieldState, rho: &[f64], kind: FieldKind) -> Result<ConstraintResidual> {
        if rho.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                actual: rho.len(),
            });
        }
        let spectral = self.spectral();
        let div_e = spectral.divergence(state.electric(kind));
        let div_b = spectral.divergence(state.magnetic(kind));
        let gauss: Vec<f64> = div_e
            .iter()
            .zip(rho)
            .map(|(d, r)| d - 4.0 * PI * (r - state.background_density))
            .collect();
        Ok(ConstraintResidual {
            gauss_norm: l2(&gauss, self.x_volume),
            div_b_norm: l2(&div_b, self.x_volume),
            gauss,
            div_b,
        })
    }

    /// Initial tilde fields: `Ẽ = -∇φ` with `Δφ = -4π(ρ₀ - ρ̄)`, and `B̃` as
    /// supplied (or zero). The supplied `B̃` must be divergence free.
    pub fn solve_initial_fields(&self, rho0: &[f64], b_tilde: Option<VectorField>) -> Result<FieldState> {
        let n = self.len();
        if rho0.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                actual: rho0.len(),
            });
        }
        let background = pairwise_sum(rho0) / n as f64;
        let spectral = self.spectral();
        let rho_hat = spectral.forward(rho0);
        let mut e_hat: Modes = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n]);
        for i in 0..n {
            let k = spectral.derivative_wavevector(i);
            let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if kk == 0.0 {
                continue;
            }
            let phi = 4.0 * PI * rho_hat[i] / kk;
            for a in 0..3 {
                e_hat[a][i] = -Complex64::i() * k[a] * phi;
            }
        }
        let b_tilde = b_tilde.unwrap_or_else(|| zero_vector_field(n));
        check_finite(&b_tilde, "magnetic field")?;
        let b_hat = spectral.forward_vector(&b_tilde);
        self.from_modes(e_hat, b_hat, 0.0, background)
    }

    /// `(1/8π) Σ (|E|² + |B|²) Δx` over the selected fields.
    pub fn field_energy(&self, state: &FieldState, kind: FieldKind) -> f64 {
        field_energy(state, kind, self.x_volume)
    }
}

pub fn field_energy(state: &FieldState, kind: FieldKind, x_volume: f64) -> f64 {
    let e = state.electric(kind);
    let b = state.magnetic(kind);
    let squares: Vec<f64> = e.iter().chain(b.iter()).flatten().map(|v| v * v).collect();
    pairwise_sum(&squares) * x_volume / (8.0 * PI)
}

fn dot_c(a: [f64; 3], v: [Complex64; 3]) -> Complex64 {
    a[0] * v[0] + a[1] * v[1] + a[2] * v[2]
}

/// `i k̂ × v`.
fn rot(khat: [f64; 3], v: [Complex64; 3]) -> [Complex64; 3] {
    let i = Complex64::i();
    [
        i * (khat[1] * v[2] - khat[2] * v[1]),
        i * (khat[2] * v[0] - khat[0] * v[2]),
        i * (khat[0] * v[1] - khat[1] * v[0]),
    ]
}

fn rotate(khat: [f64; 3], omega_t: f64, e: [Complex64; 3], b: [Complex64; 3]) -> ([Complex64; 3], [Complex64; 3]) {
    let (s, c) = omega_t.sin_cos();
    let ce = rot(khat, e);
    let cb = rot(khat, b);
    (
        std::array::from_fn(|a| c * e[a] + s * cb[a]),
        std::array::from_fn(|a| c * b[a] - s * ce[a]),
    )
}

fn advance_mode(
    k: [f64; 3],
    e: [Complex64; 3],
    b: [Complex64; 3],
    j: [Complex64; 3],
    dt: f64,
    four_pi: f64,
) -> ([Complex64; 3], [Complex64; 3]) {
    let kk = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    if kk == 0.0 {
        return (std::array::from_fn(|a| e[a] - four_pi * dt * j[a]), b);
    }
    let khat = [k[0] / kk, k[1] / kk, k[2] / kk];
    let split = |v: [Complex64; 3]| {
        let l = dot_c(khat, v);
        let long: [Complex64; 3] = std::array::from_fn(|a| khat[a] * l);
        let trans: [Complex64; 3] = std::array::from_fn(|a| v[a] - long[a]);
        (long, trans)
    };
    let (e_l, e_t) = split(e);
    let (b_l, b_t) = split(b);
    let (j_l, j_t) = split(j);
    let half = 0.5 * kk * dt;
    let (e_t, b_t) = rotate(khat, half, e_t, b_t);
    let e_t: [Complex64; 3] = std::array::from_fn(|a| e_t[a] - four_pi * dt * j_t[a]);
    let (e_t, b_t) = rotate(khat, half, e_t, b_t);
    (
        std::array::from_fn(|a| e_l[a] - four_pi * dt * j_l[a] + e_t[a]),
        std::array::from_fn(|a| b_l[a] + b_t[a]),
    )
}
