//! Momentum averages of transport triples in space-time Fourier variables.
//!
//! A triple `(h, g₀, g₁)` solves `∂_t h + p̂·∂_x h = g₀ + div_p g₁` on a
//! periodic time window times the spatial torus. Its transform uses the
//! unitary normalisation `(2π)^{-2} ∫∫ e^{-i(τt + ξ·x)} · dt dx`, so that the
//! discrete Parseval identity holds with `Δτ = 2π/T` and `Δξ_a = 2π/L_a`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::cutoff::{bump, plateau, plateau_derivative};
use crate::numerics::pairwise_sum;
use crate::phase_space::{momentum_map, PhaseGrid};
use crate::regularized::Frame;
use crate::spectral::{derivative_frequencies, fft_along, fft_frequencies, Spectral};
use crate::{Error, Result};

/// Fraction of the window at either end on which `h` must vanish.
pub const EDGE_FRACTION: f64 = 0.1;

/// Data of the inhomogeneous transport equation on `nt` time samples.
/// Arrays are indexed `(it · n_x + ix) · n_p + ip`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportTriple {
    grid: PhaseGrid,
    nt: usize,
    dt: f64,
    pub h: Vec<f64>,
    pub g0: Vec<f64>,
    pub g1: [Vec<f64>; 3],
    radius: f64,
}

impl TransportTriple {
    pub fn new(
        grid: PhaseGrid,
        nt: usize,
        dt: f64,
        h: Vec<f64>,
        g0: Vec<f64>,
        g1: [Vec<f64>; 3],
        radius: f64,
    ) -> Result<Self> {
        if nt < 2 || !(dt.is_finite() && dt > 0.0) {
            return Err(Error::TripleInvariant("need at least two positive time steps".into()));
        }
        let len = nt * grid.len();
        for v in [&h, &g0, &g1[0], &g1[1], &g1[2]] {
            if v.len() != len {
                return Err(Error::ShapeMismatch {
                    expected: len,
                    actual: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("transport triple"));
            }
        }
        let triple = Self {
            grid,
            nt,
            dt,
            h,
            g0,
            g1,
            radius,
        };
        triple.check_support()?;
        Ok(triple)
    }

    fn check_support(&self) -> Result<()> {
        let n_p = self.grid.n_p();
        let outside: Vec<bool> = self
            .grid
            .momenta()
            .into_iter()
            .map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() > self.radius)
            .collect();
        for v in [&self.h, &self.g0, &self.g1[0], &self.g1[1], &self.g1[2]] {
            if v.iter().enumerate().any(|(i, x)| *x != 0.0 && outside[i % n_p]) {
                return Err(Error::TripleInvariant(format!(
                    "data do not vanish for |p| > {}",
                    self.radius
                )));
            }
        }
        let edge = (EDGE_FRACTION * self.nt as f64).floor() as usize;
        let slab = self.grid.len();
        for it in (0..edge).chain(self.nt - edge..self.nt) {
            if self.h[it * slab..(it + 1) * slab].iter().any(|&x| x != 0.0) {
                return Err(Error::TripleInvariant(format!("h does not vanish at time sample {it}")));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn window(&self) -> f64 {
        self.nt as f64 * self.dt
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn weight(&self) -> f64 {
        self.dt * self.grid.cell_volume()
    }

    /// `(‖h‖₂, ‖g₀‖₂, ‖g₁‖₂)` over time, space and momentum.
    pub fn norms(&self) -> [f64; 3] {
        let w = self.weight();
        let sq = |v: &[f64]| pairwise_sum(&v.iter().map(|x| x * x).collect::<Vec<_>>());
        [
            (sq(&self.h) * w).sqrt(),
            (sq(&self.g0) * w).sqrt(),
            ((sq(&self.g1[0]) + sq(&self.g1[1]) + sq(&self.g1[2])) * w).sqrt(),
        ]
    }
}

/// Smooth time cutoff of a window of length `T`: `ζ((t − T/2)/(0.2T))`.
pub fn window_cutoff(t: f64, window: f64) -> (f64, f64) {
    let s = 0.2 * window;
    let u = (t - 0.5 * window) / s;
    (plateau(u), plateau_derivative(u) / s)
}

/// `h = ζf`, `g₀ = ζ′f`, `g₁ = (E + p̂×B)ζf` from equally spaced frames,
/// with the window cutoff placed over the frames.
pub fn make_triple_from_run(frames: &[Frame]) -> Result<TransportTriple> {
    if frames.len() < 2 {
        return Err(Error::History("at least two frames are required".into()));
    }
    let dt = frames[1].time - frames[0].time;
    if !(dt > 0.0) || frames.windows(2).any(|w| ((w[1].time - w[0].time) - dt).abs() > 1e-9 * dt) {
        return Err(Error::History("frames must be equally spaced and increasing in time".into()));
    }
    let grid = frames[0].f.grid().clone();
    if frames.iter().any(|fr| fr.f.grid() != &grid) {
        return Err(Error::History("frames live on different grids".into()));
    }
    let nt = frames.len();
    let window = nt as f64 * dt;
    let slab = grid.len();
    let n_p = grid.n_p();
    let velocities: Vec<[f64; 3]> = grid.momenta().into_iter().map(momentum_map).collect();
    let mut h = vec![0.0; nt * slab];
    let mut g0 = vec![0.0; nt * slab];
    let mut g1: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; nt * slab]);
    for (it, fr) in frames.iter().enumerate() {
        let (z, dz) = window_cutoff(it as f64 * dt, window);
        let base = it * slab;
        for ix in 0..grid.n_x() {
            let e = [fr.fields.e[0][ix], fr.fields.e[1][ix], fr.fields.e[2][ix]];
            let b = [fr.fields.b[0][ix], fr.fields.b[1][ix], fr.fields.b[2][ix]];
            for (ip, &fv) in fr.f.row(ix).iter().enumerate() {
                let k = base + ix * n_p + ip;
                h[k] = z * fv;
                g0[k] = dz * fv;
                let force = crate::phase_space::cross(velocities[ip], b);
                for a in 0..3 {
                    g1[a][k] = (e[a] + force[a]) * z * fv;
                }
            }
        }
    }
    let radius = grid.momentum_halfwidth() * 3f64.sqrt();
    TransportTriple::new(grid, nt, dt, h, g0, g1, radius)
}

/// Space-time transforms of a triple, per momentum cell.
#[derive(Clone, Debug)]
pub struct SpaceTimeSpectrum {
    grid: PhaseGrid,
    nt: usize,
    /// Angular frequencies of the time modes in FFT order.
    pub tau: Vec<f64>,
    tau_derivative: Vec<f64>,
    /// Wave vectors of the spatial modes in FFT order.
    pub xi: Vec<[f64; 3]>,
    xi_derivative: Vec<[f64; 3]>,
    pub h: Vec<Complex64>,
    pub g0: Vec<Complex64>,
    pub g1: [Vec<Complex64>; 3],
    /// `Δτ Δξ₁ Δξ₂ Δξ₃`.
    pub mode_measure: f64,
    /// Largest relative Parseval defect over the five transformed arrays.
    pub parseval_defect: f64,
}

fn transform(values: &[f64], shape: &[usize; 5], plans: &[Option<std::sync::Arc<dyn rustfft::Fft<f64>>>; 4], scale: f64) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for (axis, plan) in plans.iter().enumerate() {
        if let Some(p) = plan {
            fft_along(&mut data, shape, axis, p.as_ref());
        }
    }
    data.par_iter_mut().for_each(|z| *z *= scale);
    data
}

fn sum_squares_c(v: &[Complex64]) -> f64 {
    pairwise_sum(&v.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>())
}

pub fn spectrum(triple: &TransportTriple) -> Result<SpaceTimeSpectrum> {
    triple.check_support()?;
    let grid = triple.grid.clone();
    let nt = triple.nt;
    let dims = grid.spatial_cells();
    let lengths = grid.spatial_lengths();
    let shape = [nt, dims[0], dims[1], dims[2], grid.n_p()];
    let mut planner = FftPlanner::new();
    let plans: [Option<std::sync::Arc<dyn rustfft::Fft<f64>>>; 4] =
        std::array::from_fn(|a| (shape[a] > 1).then(|| planner.plan_fft_forward(shape[a])));
    let window = triple.window();
    let scale = triple.dt * grid.x_volume() / (4.0 * PI * PI);
    let h = transform(&triple.h, &shape, &plans, scale);
    let g0 = transform(&triple.g0, &shape, &plans, scale);
    let g1: [Vec<Complex64>; 3] = std::array::from_fn(|a| transform(&triple.g1[a], &shape, &plans, scale));
    let mode_measure = 2.0 * PI / window * lengths.iter().map(|l| 2.0 * PI / l).product::<f64>();
    let spectral = Spectral::new(&grid);
    let xi = (0..grid.n_x()).map(|i| spectral.wavevector(i)).collect();
    let xi_derivative = (0..grid.n_x()).map(|i| spectral.derivative_wavevector(i)).collect();
    let physical_weight = triple.weight();
    let fourier_weight = mode_measure * grid.p_volume();
    let mut defect = 0.0_f64;
    for (phys, four) in [
        (&triple.h, &h),
        (&triple.g0, &g0),
        (&triple.g1[0], &g1[0]),
        (&triple.g1[1], &g1[1]),
        (&triple.g1[2], &g1[2]),
    ] {
        let a = pairwise_sum(&phys.iter().map(|x| x * x).collect::<Vec<_>>()) * physical_weight;
        let b = sum_squares_c(four) * fourier_weight;
        if a > 0.0 {
            defect = defect.max((a.sqrt() - b.sqrt()).abs() / a.sqrt());
        } else {
            defect = defect.max(b.sqrt());
        }
    }
    Ok(SpaceTimeSpectrum {
        tau: fft_frequencies(nt, window),
        tau_derivative: derivative_frequencies(nt, window),
        xi,
        xi_derivative,
        h,
        g0,
        g1,
        mode_measure,
        parseval_defect: defect,
        grid,
        nt,
    })
}

impl SpaceTimeSpectrum {
    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn n_modes(&self) -> usize {
        self.nt * self.grid.n_x()
    }

    /// `(τ, ξ)` of a flattened mode index `it · n_x + ix`.
    pub fn mode(&self, m: usize) -> (f64, [f64; 3]) {
        let n_x = self.grid.n_x();
        (self.tau[m / n_x], self.xi[m % n_x])
    }
}

/// Centred `Σ_a ∂_{p_a} g_a` with zero extension outside the box. Works on
/// any slab layout whose innermost index is the momentum cell.
fn div_p<T>(grid: &PhaseGrid, g: &[Vec<T>; 3]) -> Vec<T>
where
    T: Copy + Send + Sync + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
{
    let n_p = grid.n_p();
    let cells = grid.momentum_cells();
    let dp = grid.dp();
    let len = g[0].len();
    let mut out = vec![T::default(); len];
    out.par_chunks_mut(n_p).enumerate().for_each(|(row, chunk)| {
        let base = row * n_p;
        for (ip, o) in chunk.iter_mut().enumerate() {
            let m = grid.p_multi(ip);
            let mut acc = T::default();
            for a in 0..3 {
                if cells[a] <= 1 {
                    continue;
                }
                let get = |k: i64| -> T {
                    if k < 0 || k >= cells[a] as i64 {
                        T::default()
                    } else {
                        let mut mm = m;
                        mm[a] = k as usize;
                        g[a][base + grid.p_flat(mm)]
                    }
                };
                acc = acc + (get(m[a] as i64 + 1) - get(m[a] as i64 - 1)) * (0.5 / dp[a]);
            }
            *o = acc;
        }
    });
    out
}

/// `‖i(τ + p̂·ξ)ĥ − ĝ₀ − div_p ĝ₁‖₂` over modes and momenta. Derivative
/// symbols drop the Nyquist modes, matching [`physical_transport_residual`].
pub fn fourier_transport_residual(spec: &SpaceTimeSpectrum) -> f64 {
    let grid = &spec.grid;
    let n_p = grid.n_p();
    let n_x = grid.n_x();
    let velocities: Vec<[f64; 3]> = grid.momenta().into_iter().map(momentum_map).collect();
    let div = div_p(grid, &spec.g1);
    let residual: Vec<f64> = (0..spec.n_modes())
        .into_par_iter()
        .map(|m| {
            let tau = spec.tau_derivative[m / n_x];
            let xi = spec.xi_derivative[m % n_x];
            let mut acc = Vec::with_capacity(n_p);
            for (ip, v) in velocities.iter().enumerate() {
                let k = m * n_p + ip;
                let symbol = Complex64::new(0.0, tau + v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2]);
                acc.push((symbol * spec.h[k] - spec.g0[k] - div[k]).norm_sqr());
            }
            pairwise_sum(&acc)
        })
        .collect();
    (pairwise_sum(&residual) * spec.mode_measure * grid.p_volume()).sqrt()
}

/// Spectral `∂_t h` and `∂_x h` of a triple, Nyquist modes dropped.
fn physical_derivatives(triple: &TransportTriple) -> (Vec<f64>, [Vec<f64>; 3]) {
    let grid = &triple.grid;
    let nt = triple.nt;
    let dims = grid.spatial_cells();
    let shape = [nt, dims[0], dims[1], dims[2], grid.n_p()];
    let lengths = [triple.window(), grid.spatial_lengths()[0], grid.spatial_lengths()[1], grid.spatial_lengths()[2]];
    let derivative = |axis: usize| -> Vec<f64> {
        let n = shape[axis];
        if n <= 1 {
            return vec![0.0; triple.h.len()];
        }
        let forward = planner_plan(&mut FftPlanner::new(), n, true);
        let inverse = planner_plan(&mut FftPlanner::new(), n, false);
        let mut data: Vec<Complex64> = triple.h.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_along(&mut data, &shape, axis, forward.as_ref());
        let k = derivative_frequencies(n, lengths[axis]);
        let stride: usize = shape[axis + 1..].iter().product();
        data.par_iter_mut().enumerate().for_each(|(i, z)| {
            let idx = (i / stride) % n;
            *z *= Complex64::new(0.0, k[idx]);
        });
        fft_along(&mut data, &shape, axis, inverse.as_ref());
        data.iter().map(|z| z.re / n as f64).collect()
    };
    let dt = derivative(0);
    let dx = [derivative(1), derivative(2), derivative(3)];
    (dt, dx)
}

fn planner_plan(planner: &mut FftPlanner<f64>, n: usize, forward: bool) -> std::sync::Arc<dyn rustfft::Fft<f64>> {
    if forward {
        planner.plan_fft_forward(n)
    } else {
        planner.plan_fft_inverse(n)
    }
}

/// `‖∂_t h + p̂·∂_x h − g₀ − div_p g₁‖₂` in physical variables.
pub fn physical_transport_residual(triple: &TransportTriple) -> f64 {
    let residual = transport_defect(triple);
    (pairwise_sum(&residual.iter().map(|x| x * x).collect::<Vec<_>>()) * triple.weight()).sqrt()
}

fn transport_defect(triple: &TransportTriple) -> Vec<f64> {
    let grid = &triple.grid;
    let n_p = grid.n_p();
    let velocities: Vec<[f64; 3]> = grid.momenta().into_iter().map(momentum_map).collect();
    let (ht, hx) = physical_derivatives(triple);
    let div = div_p(grid, &triple.g1);
    (0..triple.h.len())
        .into_par_iter()
        .map(|k| {
            let v = velocities[k % n_p];
            ht[k] + v[0] * hx[0][k] + v[1] * hx[1][k] + v[2] * hx[2][k] - triple.g0[k] - div[k]
        })
        .collect()
}

/// `ψ(p) = ζ(|p| / (R_ψ/2))`, supported in `|p| ≤ R_ψ`.
pub fn momentum_weight(grid: &PhaseGrid, psi_radius: f64) -> Vec<f64> {
    grid.momenta()
        .into_iter()
        .map(|p| plateau((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() / (0.5 * psi_radius)))
        .collect()
}

/// `κ = 1` for `|ξ| ≤ 1`, otherwise `|ξ|^{1/2}`.
pub fn kappa(xi_norm: f64) -> f64 {
    if xi_norm <= 1.0 {
        1.0
    } else {
        xi_norm.sqrt()
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[derive(Clone, Debug)]
pub struct AveragingReport {
    pub psi_radius: f64,
    /// `R_ψ / √(1 + R_ψ²)`.
    pub r: f64,
    pub psi_norm: f64,
    pub kappa: Vec<f64>,
    pub i: Vec<Complex64>,
    pub i1: Vec<Complex64>,
    pub i2: Vec<Complex64>,
    /// `‖ĥ‖₂ + ‖ĝ₀‖₂ + ‖ĝ₁‖₂` in `p` per mode.
    pub n: Vec<f64>,
    /// `‖ĥ(τ, ξ, ·)‖₂` per mode.
    pub h_norm: Vec<f64>,
    /// `max |I − I₁ − I₂| / max |I|`.
    pub split_defect: f64,
    /// Modes with `|τ| > r|ξ| + 2κ` and `I₁ ≠ 0`.
    pub i1_violations: usize,
    /// Largest `|I₁|` on `|τ| > r|ξ| + 2κ`.
    pub i1_forbidden_max: f64,
    /// Smallest `C` with `|I₁| ≤ C ‖ĥ‖₂ (κ/|ξ|)^{1/2}` over `ξ ≠ 0`.
    pub i1_constant: f64,
}

pub fn split_i(spec: &SpaceTimeSpectrum, psi_radius: f64) -> Result<AveragingReport> {
    let grid = &spec.grid;
    let p_max = grid.momentum_halfwidth();
    let dp = grid.dp();
    let cells = grid.momentum_cells();
    let edge = (0..3)
        .filter(|&a| cells[a] > 1)
        .map(|a| p_max - dp[a])
        .fold(f64::INFINITY, f64::min);
    if !(psi_radius > 0.0) || psi_radius >= edge {
        return Err(Error::SupportOutsideDomain(format!(
            "psi radius {psi_radius} reaches the momentum boundary layer"
        )));
    }
    let psi = momentum_weight(grid, psi_radius);
    let dpv = grid.p_volume();
    let psi_norm = (pairwise_sum(&psi.iter().map(|x| x * x).collect::<Vec<_>>()) * dpv).sqrt();
    let r = psi_radius / (1.0 + psi_radius * psi_radius).sqrt();
    let n_p = grid.n_p();
    let velocities: Vec<[f64; 3]> = grid.momenta().into_iter().map(momentum_map).collect();
    let rows: Vec<_> = (0..spec.n_modes())
        .into_par_iter()
        .map(|m| {
            let (tau, xi) = spec.mode(m);
            let xn = norm3(xi);
            let kap = kappa(xn);
            let mut i_all = (Vec::with_capacity(n_p), Vec::with_capacity(n_p));
            let mut i_one = (Vec::with_capacity(n_p), Vec::with_capacity(n_p));
            let mut i_two = (Vec::with_capacity(n_p), Vec::with_capacity(n_p));
            let mut sq = [Vec::with_capacity(n_p), Vec::with_capacity(n_p), Vec::with_capacity(n_p)];
            for ip in 0..n_p {
                let k = m * n_p + ip;
                let v = velocities[ip];
                let z = plateau((tau + v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2]) / kap);
                let hp = spec.h[k] * psi[ip];
                i_all.0.push(hp.re);
                i_all.1.push(hp.im);
                i_one.0.push(hp.re * z);
                i_one.1.push(hp.im * z);
                i_two.0.push(hp.re * (1.0 - z));
                i_two.1.push(hp.im * (1.0 - z));
                sq[0].push(spec.h[k].norm_sqr());
                sq[1].push(spec.g0[k].norm_sqr());
                sq[2].push(spec.g1[0][k].norm_sqr() + spec.g1[1][k].norm_sqr() + spec.g1[2][k].norm_sqr());
            }
            let c = |parts: &(Vec<f64>, Vec<f64>)| Complex64::new(pairwise_sum(&parts.0), pairwise_sum(&parts.1)) * dpv;
            let norms = sq.map(|s| (pairwise_sum(&s) * dpv).sqrt());
            (c(&i_all), c(&i_one), c(&i_two), norms, kap, tau, xn)
        })
        .collect();
    let mut report = AveragingReport {
        psi_radius,
        r,
        psi_norm,
        kappa: Vec::with_capacity(rows.len()),
        i: Vec::with_capacity(rows.len()),
        i1: Vec::with_capacity(rows.len()),
        i2: Vec::with_capacity(rows.len()),
        n: Vec::with_capacity(rows.len()),
        h_norm: Vec::with_capacity(rows.len()),
        split_defect: 0.0,
        i1_violations: 0,
        i1_forbidden_max: 0.0,
        i1_constant: 0.0,
    };
    let mut max_i = 0.0_f64;
    let mut max_split = 0.0_f64;
    for (i, i1, i2, norms, kap, tau, xn) in rows {
        max_i = max_i.max(i.norm());
        max_split = max_split.max((i - i1 - i2).norm());
        if tau.abs() > r * xn + 2.0 * kap {
            if i1 != Complex64::new(0.0, 0.0) {
                report.i1_violations += 1;
            }
            report.i1_forbidden_max = report.i1_forbidden_max.max(i1.norm());
        }
        if xn > 0.0 && norms[0] > 0.0 {
            report.i1_constant = report.i1_constant.max(i1.norm() / (norms[0] * (kap / xn).sqrt()));
        }
        report.kappa.push(kap);
        report.i.push(i);
        report.i1.push(i1);
        report.i2.push(i2);
        report.n.push(norms[0] + norms[1] + norms[2]);
        report.h_norm.push(norms[0]);
    }
    report.split_defect = if max_i > 0.0 { max_split / max_i } else { max_split };
    Ok(report)
}

/// The discrete `H^{1/4}` norm of `∫ψh dp` with its majorant and the
/// five-term split of the weighted integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct H14Norm {
    /// `(Σ (1 + |τ|^{1/2} + |ξ|^{1/2}) |I|² Δτ Δξ)^{1/2}`.
    pub norm: f64,
    /// `(‖ψ‖²‖ĥ‖² + Σ |I|²(|τ|^{1/2} + |ξ|^{1/2}) Δτ Δξ)^{1/2}`.
    pub majorant: f64,
    /// `‖∫ψh dp‖₂`.
    pub average_l2: f64,
    /// `Σ |I|²(|τ|^{1/2} + |ξ|^{1/2}) Δτ Δξ`.
    pub weighted: f64,
    pub a: [f64; 5],
    /// `Σ N² Δτ Δξ`.
    pub n_squared: f64,
    /// `‖ĥ‖₂²`.
    pub h_squared: f64,
}

pub fn h14_norm(report: &AveragingReport, spec: &SpaceTimeSpectrum) -> H14Norm {
    let measure = spec.mode_measure;
    let mut plain = Vec::with_capacity(report.i.len());
    let mut weighted = Vec::with_capacity(report.i.len());
    let mut parts: [Vec<f64>; 5] = Default::default();
    for (m, i) in report.i.iter().enumerate() {
        let (tau, xi) = spec.mode(m);
        let xn = norm3(xi);
        let s = i.norm_sqr();
        let wt = s * tau.abs().sqrt();
        let wx = s * xn.sqrt();
        plain.push(s);
        weighted.push(wt + wx);
        if xn > 1.0 {
            parts[0].push(wt);
            parts[4].push(wx);
        } else {
            if tau.abs() > report.r + 2.0 {
                parts[1].push(wt);
            } else {
                parts[2].push(wt);
            }
            parts[3].push(wx);
        }
    }
    let plain = pairwise_sum(&plain) * measure;
    let weighted = pairwise_sum(&weighted) * measure;
    let h_squared = pairwise_sum(&report.h_norm.iter().map(|x| x * x).collect::<Vec<_>>()) * measure;
    H14Norm {
        norm: (plain + weighted).sqrt(),
        majorant: (report.psi_norm * report.psi_norm * h_squared + weighted).sqrt(),
        average_l2: plain.sqrt(),
        weighted,
        a: parts.map(|p| pairwise_sum(&p) * measure),
        n_squared: pairwise_sum(&report.n.iter().map(|x| x * x).collect::<Vec<_>>()) * measure,
        h_squared,
    }
}

/// One row of the lemma verification report.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleVerification {
    pub id: String,
    pub level: usize,
    pub norms: [f64; 3],
    pub h14: f64,
    pub majorant: f64,
    /// `h14 / (‖h‖ + ‖g₀‖ + ‖g₁‖)`, 0 for a zero triple.
    pub ratio: f64,
    pub a: [f64; 5],
    pub weighted_defect: f64,
    pub split_defect: f64,
    pub parseval_defect: f64,
    pub i1_violations: usize,
    pub i1_forbidden_max: f64,
    pub i1_constant: f64,
    /// `(A₁ + A₂ + A₅) / Σ N²`.
    pub far_constant: f64,
    /// `A₃ ≤ (r + 2)^{1/2} ‖ψ‖² ‖ĥ‖²` and `A₄ ≤ ‖ψ‖² ‖ĥ‖²`.
    pub near_terms_bounded: bool,
    pub transport_residual: f64,
    pub physical_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaReport {
    pub rows: Vec<TripleVerification>,
    pub max_ratio: f64,
}

/// A triple with a label and a refinement level for reporting.
#[derive(Clone, Debug)]
pub struct LabelledTriple {
    pub id: String,
    pub level: usize,
    pub triple: TransportTriple,
}

pub fn verify_triple(t: &LabelledTriple, psi_radius: f64) -> Result<TripleVerification> {
    let spec = spectrum(&t.triple)?;
    let report = split_i(&spec, psi_radius)?;
    let h = h14_norm(&report, &spec);
    let norms = t.triple.norms();
    let total = norms[0] + norms[1] + norms[2];
    let psi2 = report.psi_norm * report.psi_norm;
    let tol = 1e-12 * (psi2 * h.h_squared).max(f64::MIN_POSITIVE);
    let a_sum: f64 = h.a.iter().sum();
    Ok(TripleVerification {
        id: t.id.clone(),
        level: t.level,
        norms,
        h14: h.norm,
        majorant: h.majorant,
        ratio: if total > 0.0 { h.norm / total } else { 0.0 },
        a: h.a,
        weighted_defect: (a_sum - h.weighted).abs() / h.weighted.max(f64::MIN_POSITIVE),
        split_defect: report.split_defect,
        parseval_defect: spec.parseval_defect,
        i1_violations: report.i1_violations,
        i1_forbidden_max: report.i1_forbidden_max,
        i1_constant: report.i1_constant,
        far_constant: if h.n_squared > 0.0 {
            (h.a[0] + h.a[1] + h.a[4]) / h.n_squared
        } else {
            0.0
        },
        near_terms_bounded: h.a[2] <= (report.r + 2.0).sqrt() * psi2 * h.h_squared + tol
            && h.a[3] <= psi2 * h.h_squared + tol,
        transport_residual: fourier_transport_residual(&spec),
        physical_residual: physical_transport_residual(&t.triple),
    })
}

pub fn verify_lemma(triples: &[LabelledTriple], psi_radius: f64) -> Result<LemmaReport> {
    if triples.is_empty() {
        return Err(Error::TripleInvariant("no triples to verify".into()));
    }
    // one triple at a time: each spectrum is already processed in parallel
    let rows = triples
        .iter()
        .map(|t| verify_triple(t, psi_radius))
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(LemmaReport { rows, max_ratio })
}

pub const REPORT_COLUMNS: &str =
    "id,level,h_norm,g0_norm,g1_norm,h14,ratio,a1,a2,a3,a4,a5,i1_violation_max,majorant,split_defect,transport_residual";

pub fn write_report_csv(path: &Path, report: &LemmaReport) -> Result<()> {
    let mut text = String::from(REPORT_COLUMNS);
    text.push('\n');
    for r in &report.rows {
        let _ = write!(text, "{},{}", r.id, r.level);
        for v in [
            r.norms[0],
            r.norms[1],
            r.norms[2],
            r.h14,
            r.ratio,
            r.a[0],
            r.a[1],
            r.a[2],
            r.a[3],
            r.a[4],
            r.i1_forbidden_max,
            r.majorant,
            r.split_defect,
            r.transport_residual,
        ] {
            let _ = write!(text, ",{v:.17e}");
        }
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Sampling resolution of a synthetic triple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripleResolution {
    pub nt: usize,
    pub nx: usize,
    pub np: usize,
}

impl TripleResolution {
    pub fn refined(self, level: usize) -> Self {
        let f = 1 << level;
        Self {
            nt: self.nt * f,
            nx: self.nx * f,
            np: self.np * f,
        }
    }
}

/// Geometry of the synthetic triples: reduced space `(L, 1, 1)`, momentum
/// box `[-P, P]² × [-P, P]` with a single cell in `p₃`, window `T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripleGeometry {
    pub length: f64,
    pub momentum_halfwidth: f64,
    pub window: f64,
    /// Momentum support radius of the data.
    pub radius: f64,
}

impl Default for TripleGeometry {
    fn default() -> Self {
        Self {
            length: 2.0 * PI,
            momentum_halfwidth: 3.0,
            window: 2.0 * PI,
            radius: 2.5,
        }
    }
}

impl TripleGeometry {
    fn grid(&self, res: TripleResolution) -> Result<PhaseGrid> {
        PhaseGrid::new([res.nx, 1, 1], [self.length, 1.0, 1.0], [res.np, res.np, 1], self.momentum_halfwidth)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Wave {
    amplitude: f64,
    mode: f64,
    frequency: f64,
    phase: f64,
    centre: [f64; 2],
    width: f64,
}

impl Wave {
    fn random(rng: &mut ChaCha8Rng, geo: &TripleGeometry) -> Self {
        let width = rng.gen_range(0.4..0.8) * geo.radius * 0.5;
        let reach = geo.radius - width;
        let angle = rng.gen_range(0.0..2.0 * PI);
        let dist = rng.gen_range(0.0..reach * 0.8);
        Self {
            amplitude: rng.gen_range(-1.0..1.0),
            mode: f64::from(rng.gen_range(0..4u8)),
            frequency: f64::from(rng.gen_range(0..4u8)),
            phase: rng.gen_range(0.0..2.0 * PI),
            centre: [dist * angle.cos(), dist * angle.sin()],
            width,
        }
    }

    fn eval(&self, geo: &TripleGeometry, t: f64, x: f64, p: [f64; 3]) -> f64 {
        let d = ((p[0] - self.centre[0]).powi(2) + (p[1] - self.centre[1]).powi(2) + p[2] * p[2]).sqrt();
        let arg = 2.0 * PI * (self.mode * x / geo.length - self.frequency * t / geo.window) + self.phase;
        self.amplitude * arg.cos() * bump(d / self.width)
    }
}

/// Random smooth triple: `h` and `g₁` are sums of windowed travelling waves
/// with bump profiles in `p`; `g₀ := ∂_t h + p̂·∂_x h − div_p g₁` is formed
/// with the same discrete operators the residual uses.
pub fn random_triple(seed: u64, geo: &TripleGeometry, res: TripleResolution) -> Result<TransportTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h_waves: Vec<Wave> = (0..3).map(|_| Wave::random(&mut rng, geo)).collect();
    let g_waves: Vec<[Wave; 2]> = (0..2).map(|_| [Wave::random(&mut rng, geo), Wave::random(&mut rng, geo)]).collect();
    let grid = geo.grid(res)?;
    let dt = geo.window / res.nt as f64;
    let sample = |waves: &dyn Fn(f64, f64, [f64; 3]) -> f64| -> Vec<f64> {
        let momenta = grid.momenta();
        let mut out = Vec::with_capacity(res.nt * grid.len());
        for it in 0..res.nt {
            let t = it as f64 * dt;
            let (w, _) = window_cutoff(t, geo.window);
            for ix in 0..grid.n_x() {
                let x = grid.x_coord(ix)[0];
                for p in &momenta {
                    out.push(if w == 0.0 { 0.0 } else { w * waves(t, x, *p) });
                }
            }
        }
        out
    };
    let h = sample(&|t, x, p| h_waves.iter().map(|w| w.eval(geo, t, x, p)).sum());
    let g1: [Vec<f64>; 3] = [
        sample(&|t, x, p| g_waves.iter().map(|w| w[0].eval(geo, t, x, p)).sum()),
        sample(&|t, x, p| g_waves.iter().map(|w| w[1].eval(geo, t, x, p)).sum()),
        vec![0.0; res.nt * grid.len()],
    ];
    let zero = vec![0.0; h.len()];
    let provisional = TransportTriple::new(grid.clone(), res.nt, dt, h, zero, g1, geo.radius)?;
    let g0 = transport_defect(&provisional);
    let TransportTriple { h, g1, .. } = provisional;
    TransportTriple::new(grid, res.nt, dt, h, g0, g1, geo.radius)
}

/// `h = w(t) H(x − p̂t, p)`, `g₀ = w′(t) H(x − p̂t, p)`, `g₁ = 0` with
/// `H(y, p) = (1 + ½ cos(2π y/L)) ψ_H(p)`.
pub fn free_streaming_triple(geo: &TripleGeometry, res: TripleResolution, mode: u32) -> Result<TransportTriple> {
    let grid = geo.grid(res)?;
    let dt = geo.window / res.nt as f64;
    let momenta = grid.momenta();
    let k = 2.0 * PI * f64::from(mode) / geo.length;
    let profile: Vec<f64> = momenta
        .iter()
        .map(|p| bump((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() / geo.radius))
        .collect();
    let len = res.nt * grid.len();
    let mut h = Vec::with_capacity(len);
    let mut g0 = Vec::with_capacity(len);
    for it in 0..res.nt {
        let t = it as f64 * dt;
        let (w, dw) = window_cutoff(t, geo.window);
        for ix in 0..grid.n_x() {
            let x = grid.x_coord(ix)[0];
            for (p, prof) in momenta.iter().zip(&profile) {
                let y = x - momentum_map(*p)[0] * t;
                let big_h = (1.0 + 0.5 * (k * y).cos()) * prof;
                h.push(w * big_h);
                g0.push(dw * big_h);
            }
        }
    }
    let zeros = || vec![0.0; len];
    TransportTriple::new(grid, res.nt, dt, h, g0, [zeros(), zeros(), zeros()], geo.radius)
}

/// Measure of `{p ∈ B_R : |τ + p̂₁ s| ≤ 2κ}` in three dimensions, by nested
/// adaptive quadrature in cylindrical coordinates around the `p₁` axis.
pub fn slab_measure(tau: f64, s: f64, kappa: f64, radius: f64) -> f64 {
    use crate::numerics::integrate;
    let inner = |p1: f64| -> f64 {
        let rho_max = (radius * radius - p1 * p1).max(0.0).sqrt();
        integrate(
            |rho| {
                let v = p1 / (1.0 + p1 * p1 + rho * rho).sqrt();
                if (tau + v * s).abs() <= 2.0 * kappa {
                    2.0 * PI * rho
                } else {
                    0.0
                }
            },
            0.0,
            rho_max,
            1e-10,
        )
    };
    integrate(inner, -radius, radius, 1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> TripleResolution {
        TripleResolution { nt: 16, nx: 8, np: 12 }
    }

    #[test]
    fn zero_triple_has_zero_everything() {
        let geo = TripleGeometry::default();
        let grid = geo.grid(coarse()).unwrap();
        let len = 16 * grid.len();
        let z = || vec![0.0; len];
        let t = TransportTriple::new(grid, 16, geo.window / 16.0, z(), z(), [z(), z(), z()], geo.radius).unwrap();
        let row = verify_triple(
            &LabelledTriple {
                id: "zero".into(),
                level: 0,
                triple: t,
            },
            2.0,
        )
        .unwrap();
        assert_eq!(row.ratio, 0.0);
        assert_eq!(row.h14, 0.0);
        assert_eq!(row.transport_residual, 0.0);
    }

    #[test]
    fn edge_and_support_invariants_are_enforced() {
        let geo = TripleGeometry::default();
        let grid = geo.grid(coarse()).unwrap();
        let len = 16 * grid.len();
        let z = || vec![0.0; len];
        let mut h = z();
        h[0] = 1.0;
        assert!(matches!(
            TransportTriple::new(grid.clone(), 16, 0.1, h, z(), [z(), z(), z()], 10.0),
            Err(Error::TripleInvariant(_))
        ));
        let mut g = z();
        g[8 * grid.len()] = 1.0; // first momentum cell is a box corner
        assert!(matches!(
            TransportTriple::new(grid, 16, 0.1, z(), g, [z(), z(), z()], 1.0),
            Err(Error::TripleInvariant(_))
        ));
    }

    #[test]
    fn random_triples_satisfy_the_identity_and_parseval() {
        let geo = TripleGeometry::default();
        let t = random_triple(7, &geo, coarse()).unwrap();
        let spec = spectrum(&t).unwrap();
        assert!(spec.parseval_defect < 1e-12, "{}", spec.parseval_defect);
        let scale = t.norms().iter().sum::<f64>();
        assert!(fourier_transport_residual(&spec) <= 1e-10 * scale);
        let fr = fourier_transport_residual(&spec);
        let pr = physical_transport_residual(&t);
        assert!((fr - pr).abs() <= 1e-10 * scale.max(pr));
    }

    #[test]
    fn split_is_exact_and_i1_vanishes_off_the_slab() {
        let geo = TripleGeometry::default();
        let t = random_triple(3, &geo, coarse()).unwrap();
        let spec = spectrum(&t).unwrap();
        let report = split_i(&spec, 2.0).unwrap();
        assert!(report.split_defect < 1e-12);
        assert_eq!(report.i1_violations, 0);
        assert_eq!(report.i1_forbidden_max, 0.0);
        assert!(report.r < 1.0);
        let h = h14_norm(&report, &spec);
        assert!(h.norm <= h.majorant);
        assert!(h.norm >= h.average_l2);
        assert!((h.a.iter().sum::<f64>() - h.weighted).abs() <= 1e-12 * h.weighted);
    }

    #[test]
    fn single_spatial_mode_occupies_two_columns() {
        let geo = TripleGeometry::default();
        let res = coarse();
        let grid = geo.grid(res).unwrap();
        let dt = geo.window / res.nt as f64;
        let mut h = Vec::new();
        for it in 0..res.nt {
            let (w, _) = window_cutoff(it as f64 * dt, geo.window);
            for ix in 0..grid.n_x() {
                for p in grid.momenta() {
                    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                    h.push(w * (2.0 * grid.x_coord(ix)[0]).cos() * bump(r / 2.0));
                }
            }
        }
        let len = h.len();
        let z = || vec![0.0; len];
        let t = TransportTriple::new(grid.clone(), res.nt, dt, h, z(), [z(), z(), z()], 2.0).unwrap();
        let spec = spectrum(&t).unwrap();
        for m in 0..spec.n_modes() {
            let (_, xi) = spec.mode(m);
            let col: f64 = (0..grid.n_p()).map(|ip| spec.h[m * grid.n_p() + ip].norm()).sum();
            if (xi[0].abs() - 2.0).abs() > 1e-12 {
                assert!(col < 1e-14, "mode {m} with xi {xi:?}");
            }
        }
    }

    #[test]
    fn psi_touching_the_box_is_rejected() {
        let geo = TripleGeometry::default();
        let spec = spectrum(&free_streaming_triple(&geo, coarse(), 1).unwrap()).unwrap();
        assert!(matches!(split_i(&spec, 2.9), Err(Error::SupportOutsideDomain(_))));
    }
}
