//! Split semi-Lagrangian transport of `f` along the characteristics
//! `ẋ = p̂`, `ṗ = E + p̂ × B`.
//!
//! Both sub-steps trace characteristics backward and interpolate with
//! tensor-product cubic Lagrange stencils (periodic in `x`, zero outside the
//! momentum box). Interpolation may undershoot or overshoot; values are then
//! clipped to `[0, max f_in]` and the clipped mass is handed back along the
//! same transport line, weighted so that the bounds and the support are kept.
//! The gross mass moved by this limiter is tallied.

use rayon::prelude::*;

use crate::numerics::{cubic_stencil, pairwise_sum};
use crate::phase_space::{boundary_layer_mass, cross, momentum_map, total_charge, DistributionFunction, PhaseGrid, VectorField};
use crate::{Error, Result};

/// Fraction of the total mass allowed in the outermost momentum layer.
pub const SUPPORT_BREACH_FRACTION: f64 = 1e-14;

/// The mollified fields that drive the momentum characteristics.
#[derive(Clone, Debug, PartialEq)]
pub struct ForceField {
    pub e: VectorField,
    pub b: VectorField,
}

impl ForceField {
    pub fn zero(n_x: usize) -> Self {
        Self {
            e: crate::phase_space::zero_vector_field(n_x),
            b: crate::phase_space::zero_vector_field(n_x),
        }
    }

    #[inline]
    fn at(&self, ix: usize) -> ([f64; 3], [f64; 3]) {
        (
            [self.e[0][ix], self.e[1][ix], self.e[2][ix]],
            [self.b[0][ix], self.b[1][ix], self.b[2][ix]],
        )
    }
}

/// Mass bookkeeping of one transport call, in units of `Σ f Δx Δp`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TransportTally {
    /// Absolute mass cut by clipping to `[0, max f_in]` before it is
    /// redistributed.
    pub clipped_mass: f64,
    /// Absolute mass defect of the momentum interpolation itself, restored
    /// per spatial cell.
    pub renormalized_mass: f64,
    /// Mass the limiter could not place back; this shows up as charge drift.
    pub unplaced_mass: f64,
}

impl std::ops::AddAssign for TransportTally {
    fn add_assign(&mut self, other: Self) {
        self.clipped_mass += other.clipped_mass;
        self.renormalized_mass += other.renormalized_mass;
        self.unplaced_mass += other.unplaced_mass;
    }
}

#[derive(Clone, Debug)]
pub struct VlasovSolver {
    grid: PhaseGrid,
    momenta: Vec<[f64; 3]>,
    velocities: Vec<[f64; 3]>,
}

impl VlasovSolver {
    pub fn new(grid: &PhaseGrid) -> Self {
        let momenta = grid.momenta();
        let velocities = momenta.iter().copied().map(momentum_map).collect();
        Self {
            grid: grid.clone(),
            momenta,
            velocities,
        }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    /// Free streaming `∂_t f + p̂ · ∂_x f = 0` over `dt`.
    pub fn advect_x(&self, f: &DistributionFunction, dt: f64) -> (DistributionFunction, TransportTally) {
        let grid = &self.grid;
        let max_in = max_value(f.values());
        let mut current = f.values().to_vec();
        let dx = grid.dx();
        let cells = grid.spatial_cells();
        let n_p = grid.n_p();
        for axis in 0..3 {
            if cells[axis] <= 1 || dt == 0.0 {
                continue;
            }
            let stencils: Vec<(i64, [f64; 4])> = self
                .velocities
                .iter()
                .map(|v| cubic_stencil(-v[axis] * dt / dx[axis]))
                .collect();
            let n = cells[axis] as i64;
            let src = &current;
            let mut dst = vec![0.0; src.len()];
            dst.par_chunks_mut(n_p).enumerate().for_each(|(ix, row)| {
                let m = grid.x_multi(ix);
                for (ip, out) in row.iter_mut().enumerate() {
                    let (base, w) = stencils[ip];
                    let mut acc = 0.0;
                    for (k, wk) in w.iter().enumerate() {
                        let mut mm = m;
                        mm[axis] = (m[axis] as i64 + base + k as i64).rem_euclid(n) as usize;
                        acc += wk * src[grid.x_flat(mm) * n_p + ip];
                    }
                    *out = acc;
                }
            });
            current = dst;
        }
        let (clipped, unplaced) = limit_columns(f.values(), &mut current, n_p, max_in);
        let out = DistributionFunction::new(grid.clone(), current, f.time() + dt)
            .expect("transport preserves the grid shape");
        let vol = grid.cell_volume();
        (
            out,
            TransportTally {
                clipped_mass: clipped * vol,
                renormalized_mass: 0.0,
                unplaced_mass: unplaced * vol,
            },
        )
    }

    /// Momentum transport `∂_t f + (E + p̂ × B) · ∂_p f = 0` at frozen `x`.
    ///
    /// Feet of characteristics are found with one backward midpoint step.
    /// Each spatial cell's momentum mass is restored after interpolation,
    /// and any mass reaching the outermost momentum layer aborts the step.
    pub fn advect_p(
        &self,
        f: &DistributionFunction,
        force: &ForceField,
        dt: f64,
    ) -> Result<(DistributionFunction, TransportTally)> {
        let grid = &self.grid;
        let n_x = grid.n_x();
        for c in force.e.iter().chain(&force.b) {
            if c.len() != n_x {
                return Err(Error::ShapeMismatch {
                    expected: n_x,
                    actual: c.len(),
                });
            }
        }
        if dt == 0.0 {
            return Ok((f.clone(), TransportTally::default()));
        }
        let max_in = max_value(f.values());
        let n_p = grid.n_p();
        let cells = grid.momentum_cells();
        let dp = grid.dp();
        let p_max = grid.momentum_halfwidth();
        let active: Vec<usize> = (0..3).filter(|&a| cells[a] > 1).collect();
        let mut values = vec![0.0; f.values().len()];
        let per_row: Vec<[f64; 3]> = values
            .par_chunks_mut(n_p)
            .enumerate()
            .map(|(ix, row)| {
                let src = f.row(ix);
                let (e, b) = force.at(ix);
                let accel = |p: [f64; 3]| {
                    let lorentz = cross(momentum_map(p), b);
                    [e[0] + lorentz[0], e[1] + lorentz[1], e[2] + lorentz[2]]
                };
                for (ip, out) in row.iter_mut().enumerate() {
                    let p = self.momenta[ip];
                    let a0 = accel(p);
                    let mid = [p[0] - 0.5 * dt * a0[0], p[1] - 0.5 * dt * a0[1], p[2] - 0.5 * dt * a0[2]];
                    let a1 = accel(mid);
                    let foot = [p[0] - dt * a1[0], p[1] - dt * a1[1], p[2] - dt * a1[2]];
                    *out = interpolate_momentum(src, grid, &active, cells, dp, p_max, foot, ip);
                }
                let before = pairwise_sum(src);
                let defect = (pairwise_sum(row) - before).abs();
                let clipped = clip(row, max_in);
                let net = before - pairwise_sum(row);
                let (s_lin, s_quad) = weight_sums(row.iter().copied(), max_in);
                let (scale, add, unplaced) = correction(net, s_lin, s_quad, max_in);
                for v in row.iter_mut() {
                    *v = apply(*v, scale, add, max_in);
                }
                [clipped, defect, unplaced]
            })
            .collect();
        let out = DistributionFunction::new(grid.clone(), values, f.time() + dt)?;
        let total = total_charge(f);
        let layer = boundary_layer_mass(&out);
        let threshold = SUPPORT_BREACH_FRACTION * total;
        if layer > threshold {
            return Err(Error::MomentumSupportBreach {
                time: f.time() + dt,
                layer_mass: layer,
                threshold,
            });
        }
        let vol = grid.cell_volume();
        let column = |k: usize| pairwise_sum(&per_row.iter().map(|r| r[k]).collect::<Vec<_>>()) * vol;
        Ok((
            out,
            TransportTally {
                clipped_mass: column(0),
                renormalized_mass: column(1),
                unplaced_mass: column(2),
            },
        ))
    }

    /// Strang composition `X(dt/2) ∘ P(dt) ∘ X(dt/2)`.
    pub fn step(
        &self,
        f: &DistributionFunction,
        force: &ForceField,
        dt: f64,
    ) -> Result<(DistributionFunction, TransportTally)> {
        let (half, mut tally) = self.advect_x(f, 0.5 * dt);
        let (kicked, t2) = self.advect_p(&half, force, dt)?;
        tally += t2;
        let (mut out, t3) = self.advect_x(&kicked, 0.5 * dt);
        tally += t3;
        out.set_time(f.time() + dt);
        Ok((out, tally))
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn interpolate_momentum(
    src: &[f64],
    grid: &PhaseGrid,
    active: &[usize],
    cells: [usize; 3],
    dp: [f64; 3],
    p_max: f64,
    foot: [f64; 3],
    ip: usize,
) -> f64 {
    let here = grid.p_multi(ip);
    let mut bases = [0i64; 3];
    let mut weights = [[1.0, 0.0, 0.0, 0.0]; 3];
    let mut spans = [1usize; 3];
    for &a in active {
        let (base, w) = cubic_stencil((foot[a] + p_max) / dp[a] - 0.5);
        bases[a] = base;
        weights[a] = w;
        spans[a] = 4;
    }
    let mut acc = 0.0;
    for k0 in 0..spans[0] {
        let i0 = if spans[0] == 4 { bases[0] + k0 as i64 } else { here[0] as i64 };
        if i0 < 0 || i0 >= cells[0] as i64 {
            continue;
        }
        for k1 in 0..spans[1] {
            let i1 = if spans[1] == 4 { bases[1] + k1 as i64 } else { here[1] as i64 };
            if i1 < 0 || i1 >= cells[1] as i64 {
                continue;
            }
            let w01 = weights[0][k0] * weights[1][k1];
            for k2 in 0..spans[2] {
                let i2 = if spans[2] == 4 { bases[2] + k2 as i64 } else { here[2] as i64 };
                if i2 < 0 || i2 >= cells[2] as i64 {
                    continue;
                }
                let idx = grid.p_flat([i0 as usize, i1 as usize, i2 as usize]);
                acc += w01 * weights[2][k2] * src[idx];
            }
        }
    }
    acc
}

fn max_value(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, &v| m.max(v))
}

/// Per-column limiter for the spatial sweep: every momentum index `ip`
/// keeps the mass it had in `before`. Returns gross clipped and unplaced sums.
fn limit_columns(before: &[f64], values: &mut [f64], n_p: usize, upper: f64) -> (f64, f64) {
    let n_x = values.len() / n_p;
    let clipped = clip(values, upper);
    if clipped == 0.0 {
        return (0.0, 0.0);
    }
    let vals = &*values;
    let plans: Vec<(f64, f64, f64)> = (0..n_p)
        .into_par_iter()
        .map(|ip| {
            let target = crate::numerics::pairwise_sum_by(n_x, |ix| before[ix * n_p + ip]);
            let now = crate::numerics::pairwise_sum_by(n_x, |ix| vals[ix * n_p + ip]);
            let (s_lin, s_quad) = weight_sums((0..n_x).map(|ix| vals[ix * n_p + ip]), upper);
            correction(target - now, s_lin, s_quad, upper)
        })
        .collect();
    values.par_chunks_mut(n_p).for_each(|row| {
        for (v, &(scale, add, _)) in row.iter_mut().zip(&plans) {
            *v = apply(*v, scale, add, upper);
        }
    });
    (clipped, plans.iter().map(|p| p.2.abs()).sum())
}

/// `Σ v` and `Σ v (M − v)` over a line.
fn weight_sums(values: impl Iterator<Item = f64>, upper: f64) -> (f64, f64) {
    let (lin, quad): (Vec<f64>, Vec<f64>) = values.map(|v| (v, v * (upper - v))).unzip();
    (pairwise_sum(&lin), pairwise_sum(&quad))
}

/// How to return `net` units of mass to a line with values in `[0, M]`:
/// a deficit is added as `c v (M − v)` with `c ≤ 1/M`, a surplus removed by
/// scaling. Returns `(scale, c, unplaced)`.
fn correction(net: f64, s_lin: f64, s_quad: f64, upper: f64) -> (f64, f64, f64) {
    if net > 0.0 {
        if s_quad <= 0.0 {
            return (1.0, 0.0, net);
        }
        let c = (net / s_quad).min(1.0 / upper);
        (1.0, c, net - c * s_quad)
    } else if net < 0.0 {
        if s_lin <= 0.0 {
            return (1.0, 0.0, net);
        }
        let scale = (1.0 + net / s_lin).max(0.0);
        (scale, 0.0, net + (1.0 - scale) * s_lin)
    } else {
        (1.0, 0.0, 0.0)
    }
}

#[inline]
fn apply(v: f64, scale: f64, add: f64, upper: f64) -> f64 {
    (v * scale + add * v * (upper - v)).clamp(0.0, upper)
}

/// Clips to `[0, upper]` and returns the absolute clipped sum.
fn clip(values: &mut [f64], upper: f64) -> f64 {
    let mut removed = Vec::new();
    for v in values.iter_mut() {
        if *v < 0.0 {
            removed.push(-*v);
            *v = 0.0;
        } else if *v > upper {
            removed.push(*v - upper);
            *v = upper;
        }
    }
    pairwise_sum(&removed)
}
