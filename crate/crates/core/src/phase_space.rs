//! Phase-space grids, the distribution function and momentum integrals.
//!
//! Space is a periodic box `[0, L1) × [0, L2) × [0, L3)` sampled at nodes
//! `x_i = i Δx`; momentum is the box `[-P, P]³` sampled at cell centres.
//! All momentum integrals use the midpoint rule. An axis with a single cell
//! is degenerate: the spatial field does not vary along it and the single
//! momentum cell is centred at 0 with width `2P`.
//!
//! Values are stored x-major: `index = ix * n_p + ip`, with both flat
//! indices row-major over their three axes.

use rayon::prelude::*;

use crate::numerics::pairwise_sum_by;
use crate::{Error, Result};

/// Three component arrays over spatial cells.
pub type VectorField = [Vec<f64>; 3];

pub fn zero_vector_field(len: usize) -> VectorField {
    [vec![0.0; len], vec![0.0; len], vec![0.0; len]]
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGrid {
    spatial_cells: [usize; 3],
    spatial_lengths: [f64; 3],
    momentum_cells: [usize; 3],
    momentum_halfwidth: f64,
}

impl PhaseGrid {
    pub fn new(
        spatial_cells: [usize; 3],
        spatial_lengths: [f64; 3],
        momentum_cells: [usize; 3],
        momentum_halfwidth: f64,
    ) -> Result<Self> {
        if spatial_cells.iter().chain(&momentum_cells).any(|&n| n == 0) {
            return Err(Error::InvalidGrid("every cell count must be at least 1".into()));
        }
        if spatial_lengths.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidGrid("spatial lengths must be positive".into()));
        }
        if !(momentum_halfwidth.is_finite() && momentum_halfwidth > 0.0) {
            return Err(Error::InvalidGrid("momentum half-width must be positive".into()));
        }
        Ok(Self {
            spatial_cells,
            spatial_lengths,
            momentum_cells,
            momentum_halfwidth,
        })
    }

    pub fn spatial_cells(&self) -> [usize; 3] {
        self.spatial_cells
    }

    pub fn spatial_lengths(&self) -> [f64; 3] {
        self.spatial_lengths
    }

    pub fn momentum_cells(&self) -> [usize; 3] {
        self.momentum_cells
    }

    pub fn momentum_halfwidth(&self) -> f64 {
        self.momentum_halfwidth
    }

    pub fn dx(&self) -> [f64; 3] {
        std::array::from_fn(|a| self.spatial_lengths[a] / self.spatial_cells[a] as f64)
    }

    pub fn dp(&self) -> [f64; 3] {
        std::array::from_fn(|a| 2.0 * self.momentum_halfwidth / self.momentum_cells[a] as f64)
    }

    /// Spatial cell volume `Δx1 Δx2 Δx3`.
    pub fn x_volume(&self) -> f64 {
        self.dx().iter().product()
    }

    /// Momentum cell volume `Δp1 Δp2 Δp3`.
    pub fn p_volume(&self) -> f64 {
        self.dp().iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.x_volume() * self.p_volume()
    }

    pub fn domain_volume(&self) -> f64 {
        self.spatial_lengths.iter().product()
    }

    pub fn n_x(&self) -> usize {
        self.spatial_cells.iter().product()
    }

    pub fn n_p(&self) -> usize {
        self.momentum_cells.iter().product()
    }

    pub fn len(&self) -> usize {
        self.n_x() * self.n_p()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_multi(&self, ix: usize) -> [usize; 3] {
        unflatten(ix, self.spatial_cells)
    }

    pub fn p_multi(&self, ip: usize) -> [usize; 3] {
        unflatten(ip, self.momentum_cells)
    }

    pub fn x_flat(&self, m: [usize; 3]) -> usize {
        (m[0] * self.spatial_cells[1] + m[1]) * self.spatial_cells[2] + m[2]
    }

    pub fn p_flat(&self, m: [usize; 3]) -> usize {
        (m[0] * self.momentum_cells[1] + m[1]) * self.momentum_cells[2] + m[2]
    }

    /// Node position of spatial cell `ix`.
    pub fn x_coord(&self, ix: usize) -> [f64; 3] {
        let m = self.x_multi(ix);
        let dx = self.dx();
        std::array::from_fn(|a| m[a] as f64 * dx[a])
    }

    /// Centre of momentum cell `ip`.
    pub fn p_coord(&self, ip: usize) -> [f64; 3] {
        let m = self.p_multi(ip);
        let dp = self.dp();
        std::array::from_fn(|a| -self.momentum_halfwidth + (m[a] as f64 + 0.5) * dp[a])
    }

    /// All momentum cell centres in flat order.
    pub fn momenta(&self) -> Vec<[f64; 3]> {
        (0..self.n_p()).map(|ip| self.p_coord(ip)).collect()
    }

    /// Whether momentum cell `ip` lies on the outermost layer of a
    /// non-degenerate axis.
    pub fn in_boundary_layer(&self, ip: usize) -> bool {
        let m = self.p_multi(ip);
        (0..3).any(|a| self.momentum_cells[a] > 1 && (m[a] == 0 || m[a] + 1 == self.momentum_cells[a]))
    }

    /// Grid with every cell count scaled by `factor` on non-degenerate axes.
    pub fn refined(&self, factor: usize) -> Self {
        let scale = |n: usize| if n > 1 { n * factor } else { 1 };
        Self {
            spatial_cells: self.spatial_cells.map(scale),
            spatial_lengths: self.spatial_lengths,
            momentum_cells: self.momentum_cells.map(scale),
            momentum_halfwidth: self.momentum_halfwidth,
        }
    }
}

fn unflatten(i: usize, n: [usize; 3]) -> [usize; 3] {
    let i2 = i % n[2];
    let rest = i / n[2];
    [rest / n[1], rest % n[1], i2]
}

/// `f(t, x, p)` sampled on a [`PhaseGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionFunction {
    grid: PhaseGrid,
    values: Vec<f64>,
    time: f64,
}

impl DistributionFunction {
    pub fn new(grid: PhaseGrid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("distribution values"));
        }
        Ok(Self { grid, values, time })
    }

    pub fn zeros(grid: PhaseGrid, time: f64) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values, time }
    }

    /// Samples `profile(x, p)` at every node/cell centre.
    pub fn from_fn<F>(grid: PhaseGrid, time: f64, profile: F) -> Self
    where
        F: Fn([f64; 3], [f64; 3]) -> f64 + Sync,
    {
        let momenta = grid.momenta();
        let n_p = grid.n_p();
        let mut values = vec![0.0; grid.len()];
        values.par_chunks_mut(n_p).enumerate().for_each(|(ix, row)| {
            let x = grid.x_coord(ix);
            for (v, p) in row.iter_mut().zip(&momenta) {
                *v = profile(x, *p);
            }
        });
        Self { grid, values, time }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    /// Momentum row of spatial cell `ix`.
    pub fn row(&self, ix: usize) -> &[f64] {
        let n_p = self.grid.n_p();
        &self.values[ix * n_p..(ix + 1) * n_p]
    }

    /// Checks the density invariants: no negative values and an empty
    /// outermost momentum layer.
    pub fn validate(&self) -> Result<()> {
        if let Some((index, &value)) = self.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeDensity { index, value });
        }
        let layer = boundary_layer_mass(self);
        let total = total_charge(self);
        let threshold = 1e-14 * total;
        if layer > threshold {
            return Err(Error::MomentumSupportBreach {
                time: self.time,
                layer_mass: layer,
                threshold,
            });
        }
        Ok(())
    }
}

/// The relativistic velocity `p / sqrt(1 + |p|²)`.
#[inline]
pub fn momentum_map(p: [f64; 3]) -> [f64; 3] {
    let gamma = lorentz_factor(p);
    [p[0] / gamma, p[1] / gamma, p[2] / gamma]
}

/// `sqrt(1 + |p|²)`.
#[inline]
pub fn lorentz_factor(p: [f64; 3]) -> f64 {
    (1.0 + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentFields {
    pub rho: Vec<f64>,
    pub j: VectorField,
    pub q: f64,
}

/// `ρ_q = ∫ f^q dp` and `j_q = ∫ p̂ f^q dp` on every spatial cell.
pub fn compute_moments(f: &DistributionFunction, q: f64) -> Result<MomentFields> {
    if !(q >= 1.0) || q.is_infinite() {
        return Err(Error::InvalidExponent(q));
    }
    let grid = f.grid();
    let velocities: Vec<[f64; 3]> = grid.momenta().into_iter().map(momentum_map).collect();
    let dp = grid.p_volume();
    let power = |v: f64| if q == 1.0 { v } else { v.abs().powf(q) };
    let per_cell: Vec<[f64; 4]> = (0..grid.n_x())
        .into_par_iter()
        .map(|ix| {
            let row = f.row(ix);
            let rho = pairwise_sum_by(row.len(), |k| power(row[k]));
            let j: [f64; 3] =
                std::array::from_fn(|a| pairwise_sum_by(row.len(), |k| velocities[k][a] * power(row[k])));
            [rho * dp, j[0] * dp, j[1] * dp, j[2] * dp]
        })
        .collect();
    let rho = per_cell.iter().map(|c| c[0]).collect();
    let j = std::array::from_fn(|a| per_cell.iter().map(|c| c[a + 1]).collect());
    Ok(MomentFields { rho, j, q })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyDensities {
    pub e: Vec<f64>,
    pub sigma: VectorField,
}

fn check_field(field: &VectorField, n: usize) -> Result<()> {
    for c in field {
        if c.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                actual: c.len(),
            });
        }
    }
    Ok(())
}

/// Energy density `∫ γ f dp + (|E|² + |B|²)/8π` and flux
/// `∫ p f dp + E × B / 4π` per spatial cell.
pub fn compute_energy_densities(
    f: &DistributionFunction,
    e_field: &VectorField,
    b_field: &VectorField,
) -> Result<EnergyDensities> {
    let grid = f.grid();
    let n_x = grid.n_x();
    check_field(e_field, n_x)?;
    check_field(b_field, n_x)?;
    let momenta = grid.momenta();
    let dp = grid.p_volume();
    let eight_pi = 8.0 * std::f64::consts::PI;
    let four_pi = 4.0 * std::f64::consts::PI;
    let per_cell: Vec<[f64; 4]> = (0..n_x)
        .into_par_iter()
        .map(|ix| {
            let row = f.row(ix);
            let kinetic = pairwise_sum_by(row.len(), |k| lorentz_factor(momenta[k]) * row[k]) * dp;
            let flux: [f64; 3] =
                std::array::from_fn(|a| pairwise_sum_by(row.len(), |k| momenta[k][a] * row[k]) * dp);
            let e = [e_field[0][ix], e_field[1][ix], e_field[2][ix]];
            let b = [b_field[0][ix], b_field[1][ix], b_field[2][ix]];
            let field = (dot(e, e) + dot(b, b)) / eight_pi;
            let poynting = cross(e, b);
            [
                kinetic + field,
                flux[0] + poynting[0] / four_pi,
                flux[1] + poynting[1] / four_pi,
                flux[2] + poynting[2] / four_pi,
            ]
        })
        .collect();
    Ok(EnergyDensities {
        e: per_cell.iter().map(|c| c[0]).collect(),
        sigma: std::array::from_fn(|a| per_cell.iter().map(|c| c[a + 1]).collect()),
    })
}

/// Discrete `L^q` norm over phase space; `q = ∞` gives the plain maximum.
pub fn lq_norm(f: &DistributionFunction, q: f64) -> Result<f64> {
    weighted_lq_norm(f.values(), f.grid().cell_volume(), q)
}

/// `(Σ |v|^q w)^{1/q}`, or `max |v|` for `q = ∞`.
pub fn weighted_lq_norm(values: &[f64], weight: f64, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidExponent(q));
    }
    if q.is_infinite() {
        return Ok(values.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    }
    let sum = if q == 1.0 {
        pairwise_sum_by(values.len(), |i| values[i].abs())
    } else if q == 2.0 {
        pairwise_sum_by(values.len(), |i| values[i] * values[i])
    } else {
        pairwise_sum_by(values.len(), |i| values[i].abs().powf(q))
    };
    Ok((sum * weight).powf(1.0 / q))
}

/// Spatial `L^q` norm of the pointwise magnitude of a vector field.
pub fn vector_lq_norm(field: &VectorField, weight: f64, q: f64) -> Result<f64> {
    let magnitude: Vec<f64> = (0..field[0].len())
        .map(|i| (field[0][i] * field[0][i] + field[1][i] * field[1][i] + field[2][i] * field[2][i]).sqrt())
        .collect();
    weighted_lq_norm(&magnitude, weight, q)
}

/// `‖f‖_kin = Σ γ f Δx Δp`; only defined for nonnegative densities.
pub fn kinetic_norm(f: &DistributionFunction) -> Result<f64> {
    if let Some((index, &value)) = f.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeDensity { index, value });
    }
    Ok(kinetic_sum(f))
}

pub(crate) fn kinetic_sum(f: &DistributionFunction) -> f64 {
    let grid = f.grid();
    let gammas: Vec<f64> = grid.momenta().into_iter().map(lorentz_factor).collect();
    let n_p = grid.n_p();
    let values = f.values();
    pairwise_sum_by(values.len(), |i| gammas[i % n_p] * values[i]) * grid.cell_volume()
}

/// `Σ f Δx Δp`.
pub fn total_charge(f: &DistributionFunction) -> f64 {
    let values = f.values();
    pairwise_sum_by(values.len(), |i| values[i]) * f.grid().cell_volume()
}

/// Mass held by the outermost momentum layer.
pub fn boundary_layer_mass(f: &DistributionFunction) -> f64 {
    let grid = f.grid();
    let layer: Vec<bool> = (0..grid.n_p()).map(|ip| grid.in_boundary_layer(ip)).collect();
    if !layer.iter().any(|&b| b) {
        return 0.0;
    }
    let n_p = grid.n_p();
    let values = f.values();
    pairwise_sum_by(values.len(), |i| if layer[i % n_p] { values[i].abs() } else { 0.0 }) * grid.cell_volume()
}

/// Distance in momentum units between the numerical support (cells above
/// `rel_threshold · max f`) and the box edge, minimised over non-degenerate
/// axes. Returns the half-width `P` for an empty density.
pub fn support_margin(f: &DistributionFunction, rel_threshold: f64) -> f64 {
    let grid = f.grid();
    let max = lq_norm(f, f64::INFINITY).unwrap_or(0.0);
    let p_max = grid.momentum_halfwidth();
    if max == 0.0 {
        return p_max;
    }
    let cut = rel_threshold * max;
    let n_p = grid.n_p();
    let dp = grid.dp();
    let cells = grid.momentum_cells();
    let mut reach = [0.0_f64; 3];
    let momenta = grid.momenta();
    for (i, v) in f.values().iter().enumerate() {
        if *v > cut {
            let p = momenta[i % n_p];
            for a in 0..3 {
                if cells[a] > 1 {
                    reach[a] = reach[a].max(p[a].abs() + 0.5 * dp[a]);
                }
            }
        }
    }
    (0..3)
        .filter(|&a| cells[a] > 1)
        .map(|a| p_max - reach[a])
        .fold(p_max, f64::min)
}

#[inline]
pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
