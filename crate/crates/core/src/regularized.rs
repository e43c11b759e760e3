//! The regularized system: tilde fields driven by `d_n ∗ j`, particles
//! driven by the mollified fields `d_n ∗ Ẽ`, `d_n ∗ B̃`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::cutoff::{bump, flat_taper};
use crate::diagnostics::{write_csv, DiagnosticRecord};
use crate::maxwell::{FieldKind, FieldState, MaxwellSolver};
use crate::mollifier::{MollifierKernel, ScaledMollifier};
use crate::numerics::pairwise_sum;
use crate::phase_space::{
    compute_moments, kinetic_norm, lorentz_factor, lq_norm, support_margin, total_charge, vector_lq_norm,
    weighted_lq_norm, zero_vector_field, DistributionFunction, PhaseGrid, VectorField,
};
use crate::snapshot::{write_distribution, write_vector_field};
use crate::vlasov::{ForceField, TransportTally, VlasovSolver};
use crate::{Error, Result};

/// Momentum taper of the presets, as fractions of the distance from the
/// bump centre to the box edge.
pub const TAPER_START: f64 = 0.3;
pub const TAPER_END: f64 = 0.8;

/// Pointwise threshold, relative to `max f`, defining the numerical support.
pub const SUPPORT_THRESHOLD: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetKind {
    MaxwellianBump,
    TwoStream,
    LocalizedBump,
    Zero,
}

impl PresetKind {
    pub const ALL: [PresetKind; 4] = [
        PresetKind::MaxwellianBump,
        PresetKind::TwoStream,
        PresetKind::LocalizedBump,
        PresetKind::Zero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetKind::MaxwellianBump => "maxwellian-bump",
            PresetKind::TwoStream => "two-stream",
            PresetKind::LocalizedBump => "localized-bump",
            PresetKind::Zero => "zero",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            PresetKind::MaxwellianBump => "A(1 + alpha cos(k0 x1)) exp(-beta sqrt(1+|p|^2)), smoothly truncated in p",
            PresetKind::TwoStream => "two relativistic bumps drifting at +/- drift along p1, same spatial modulation",
            PresetKind::LocalizedBump => {
                "compactly supported spatial bump of radius bump_radius and peak density alpha * density, times the momentum bump"
            }
            PresetKind::Zero => "f = 0",
        }
    }
}

impl FromStr for PresetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

impl std::fmt::Display for PresetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Mollifier scale of a single run.
    pub n: i64,
    /// Scales of a convergence sequence.
    pub n_list: Vec<i64>,
    pub spatial_cells: [usize; 3],
    pub lengths: [f64; 3],
    pub momentum_cells: [usize; 3],
    pub momentum_halfwidth: f64,
    pub dt: f64,
    /// Negative values integrate backward in time.
    pub t_final: f64,
    pub preset: PresetKind,
    /// Mean charge density of the initial data.
    pub density: f64,
    /// Modulation depth; for the localized bump, its peak relative to `density`.
    pub alpha: f64,
    /// Wave number index of the spatial modulation along `x₁`.
    pub mode: u32,
    pub beta: f64,
    pub drift: f64,
    /// Amplitude of the initial `B̃₃ = b cos(2π x₁ / L₁)`.
    pub b_amplitude: f64,
    pub bump_radius: f64,
    pub save_every: usize,
    pub output_dir: Option<PathBuf>,
    pub write_snapshots: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 4,
            n_list: vec![2, 4, 8, 16],
            spatial_cells: [64, 1, 1],
            lengths: [4.0 * PI, 1.0, 1.0],
            momentum_cells: [32, 32, 1],
            momentum_halfwidth: 6.0,
            dt: 0.05,
            t_final: 10.0,
            preset: PresetKind::MaxwellianBump,
            density: 1.0 / (4.0 * PI),
            alpha: 0.1,
            mode: 1,
            beta: 1.0,
            drift: 1.0,
            b_amplitude: 0.0,
            bump_radius: 2.0,
            save_every: 1,
            output_dir: None,
            write_snapshots: false,
            seed: 0,
        }
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(invalid("n", "must be a positive integer"));
        }
        if self.n_list.is_empty() || self.n_list.iter().any(|&n| n < 1) {
            return Err(invalid("n_list", "must list positive integers"));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n_list", "must be strictly increasing"));
        }
        if self.spatial_cells.iter().chain(&self.momentum_cells).any(|&c| c == 0) {
            return Err(invalid("grid", "cell counts must be positive"));
        }
        if self.lengths.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(invalid("grid.lengths", "must be positive"));
        }
        if !(self.momentum_halfwidth.is_finite() && self.momentum_halfwidth > 0.0) {
            return Err(invalid("grid.momentum_halfwidth", "must be positive"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", "must be positive and finite"));
        }
        if !self.t_final.is_finite() {
            return Err(invalid("t_final", "must be finite"));
        }
        let steps = self.t_final.abs() / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(invalid("t_final", "must be an integer multiple of dt"));
        }
        if !(self.density.is_finite() && self.density >= 0.0) {
            return Err(invalid("preset.density", "must be non-negative"));
        }
        if !(self.alpha.is_finite() && self.alpha.abs() <= 1.0) {
            return Err(invalid("preset.alpha", "must lie in [-1, 1]"));
        }
        if self.preset == PresetKind::LocalizedBump && self.alpha <= 0.0 {
            return Err(invalid("preset.alpha", "must be positive for the localized bump"));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(invalid("preset.beta", "must be positive"));
        }
        if !(self.drift.is_finite() && self.drift.abs() < self.momentum_halfwidth) {
            return Err(invalid("preset.drift", "must be smaller than the momentum half-width"));
        }
        if !self.b_amplitude.is_finite() {
            return Err(invalid("preset.b_amplitude", "must be finite"));
        }
        if !(self.bump_radius.is_finite() && self.bump_radius > 0.0) {
            return Err(invalid("preset.bump_radius", "must be positive"));
        }
        if self.save_every == 0 {
            return Err(invalid("save_every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<PhaseGrid> {
        PhaseGrid::new(self.spatial_cells, self.lengths, self.momentum_cells, self.momentum_halfwidth)
    }

    /// Number of steps and signed step size.
    pub fn schedule(&self) -> (u64, f64) {
        let steps = (self.t_final.abs() / self.dt).round() as u64;
        (steps, if self.t_final < 0.0 { -self.dt } else { self.dt })
    }
}

/// Initial distribution of a preset, together with the initial `B̃`.
pub fn initial_data(config: &RunConfig) -> Result<(DistributionFunction, Option<VectorField>)> {
    config.validate()?;
    let grid = config.grid()?;
    if config.preset == PresetKind::Zero {
        return Ok((DistributionFunction::zeros(grid, 0.0), None));
    }
    let p_max = config.momentum_halfwidth;
    let centres: Vec<f64> = match config.preset {
        PresetKind::TwoStream => vec![config.drift, -config.drift],
        _ => vec![0.0],
    };
    let reach = p_max - centres[0].abs();
    let beta = config.beta;
    let momentum = move |p: [f64; 3]| -> f64 {
        centres
            .iter()
            .map(|&c| {
                let q = [p[0] - c, p[1], p[2]];
                let r = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
                (-beta * lorentz_factor(q)).exp() * flat_taper(r, TAPER_START * reach, TAPER_END * reach)
            })
            .sum::<f64>()
            / centres.len() as f64
    };
    let lengths = config.lengths;
    let cells = config.spatial_cells;
    let k0 = 2.0 * PI * f64::from(config.mode) / lengths[0];
    let alpha = config.alpha;
    let radius = config.bump_radius;
    let localized = config.preset == PresetKind::LocalizedBump;
    let spatial = move |x: [f64; 3]| -> f64 {
        if localized {
            let mut d2 = 0.0;
            for a in 0..3 {
                if cells[a] > 1 {
                    let d = x[a] - 0.5 * lengths[a];
                    let d = d - lengths[a] * (d / lengths[a]).round();
                    d2 += d * d;
                }
            }
            bump(d2.sqrt() / radius)
        } else {
            1.0 + alpha * (k0 * x[0]).cos()
        }
    };
    let p_mass = pairwise_sum(&grid.momenta().into_iter().map(&momentum).collect::<Vec<_>>()) * grid.p_volume();
    // the localized bump peaks at `alpha * density`
    let x_mean = if localized {
        bump(0.0) / alpha
    } else {
        pairwise_sum(&(0..grid.n_x()).map(|ix| spatial(grid.x_coord(ix))).collect::<Vec<_>>()) / grid.n_x() as f64
    };
    let amplitude = if p_mass > 0.0 && x_mean > 0.0 {
        config.density / (p_mass * x_mean)
    } else {
        0.0
    };
    let f = DistributionFunction::from_fn(grid.clone(), 0.0, |x, p| amplitude * spatial(x) * momentum(p));
    let b = if config.b_amplitude != 0.0 {
        let mut field = zero_vector_field(grid.n_x());
        let kb = 2.0 * PI / lengths[0];
        for (ix, v) in field[2].iter_mut().enumerate() {
            *v = config.b_amplitude * (kb * grid.x_coord(ix)[0]).cos();
        }
        Some(field)
    } else {
        None
    };
    Ok((f, b))
}

/// State of one regularized run at a fixed mollifier scale.
#[derive(Clone, Debug)]
pub struct Simulation {
    config: RunConfig,
    grid: PhaseGrid,
    f: DistributionFunction,
    fields: FieldState,
    maxwell: MaxwellSolver,
    vlasov: VlasovSolver,
    step_index: u64,
    dt: f64,
    tally: TransportTally,
}

impl Simulation {
    pub fn new(config: &RunConfig) -> Result<Self> {
        Self::with_scale(config, config.n)
    }

    pub fn with_scale(config: &RunConfig, n: i64) -> Result<Self> {
        let (f, b_tilde) = initial_data(config)?;
        f.validate()?;
        let grid = f.grid().clone();
        let mollifier = ScaledMollifier::new(&MollifierKernel::new(), n, &grid)?;
        let maxwell = MaxwellSolver::new(&grid, mollifier);
        let rho = compute_moments(&f, 1.0)?.rho;
        let mut fields = maxwell.solve_initial_fields(&rho, b_tilde)?;
        fields.time = 0.0;
        let mut config = config.clone();
        config.n = n;
        let (_, dt) = config.schedule();
        Ok(Self {
            vlasov: VlasovSolver::new(&grid),
            config,
            grid,
            f,
            fields,
            maxwell,
            step_index: 0,
            dt,
            tally: TransportTally::default(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn f(&self) -> &DistributionFunction {
        &self.f
    }

    pub fn fields(&self) -> &FieldState {
        &self.fields
    }

    pub fn maxwell(&self) -> &MaxwellSolver {
        &self.maxwell
    }

    pub fn mollifier(&self) -> &ScaledMollifier {
        self.maxwell.mollifier()
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn time(&self) -> f64 {
        self.f.time()
    }

    /// Signed step size.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn tally(&self) -> TransportTally {
        self.tally
    }

    fn mollified_current(&self, f: &DistributionFunction) -> Result<VectorField> {
        let j = compute_moments(f, 1.0)?.j;
        self.mollifier().convolve_vector(&j, 1)
    }

    /// One Strang step: fields by `dt/2`, particles by `dt` in the mid-step
    /// mollified fields, fields by `dt/2` with the updated current.
    pub fn step(&mut self) -> Result<()> {
        let half = 0.5 * self.dt;
        let j0 = self.mollified_current(&self.f)?;
        let mid = self.maxwell.step(&self.fields, &j0, half)?;
        let force = ForceField {
            e: mid.e.clone(),
            b: mid.b.clone(),
        };
        let (mut f, tally) = self.vlasov.step(&self.f, &force, self.dt)?;
        let j1 = self.mollified_current(&f)?;
        let mut fields = self.maxwell.step(&mid, &j1, half)?;
        self.step_index += 1;
        let time = self.step_index as f64 * self.dt;
        f.set_time(time);
        fields.time = time;
        self.f = f;
        self.fields = fields;
        self.tally += tally;
        Ok(())
    }

    /// `‖f‖_kin + (1/8π)(‖Ẽ‖² + ‖B̃‖²)`.
    pub fn modified_energy(&self) -> Result<f64> {
        Ok(kinetic_norm(&self.f)? + self.maxwell.field_energy(&self.fields, FieldKind::Tilde))
    }

    /// `‖f‖_kin + (1/8π)(‖E‖² + ‖B‖²)` with the mollified fields.
    pub fn physical_energy(&self) -> Result<f64> {
        Ok(kinetic_norm(&self.f)? + self.maxwell.field_energy(&self.fields, FieldKind::Mollified))
    }

    /// `div Ẽ − 4π d_n ∗ (ρ − ρ̄)` and `div B̃`; the first is constant in time
    /// for the continuous regularized system.
    pub fn regularized_gauss(&self) -> Result<crate::maxwell::ConstraintResidual> {
        let rho = compute_moments(&self.f, 1.0)?.rho;
        let rho_m = self.mollifier().convolve(&rho, 1)?;
        self.maxwell.constraint_residual(&self.fields, &rho_m, FieldKind::Tilde)
    }

    pub fn record(&self) -> Result<DiagnosticRecord> {
        let moments = compute_moments(&self.f, 1.0)?;
        let xv = self.grid.x_volume();
        let kin = kinetic_norm(&self.f)?;
        let j_abs: Vec<f64> = (0..self.grid.n_x())
            .map(|i| (moments.j[0][i].powi(2) + moments.j[1][i].powi(2) + moments.j[2][i].powi(2)).sqrt())
            .collect();
        let residual = self.regularized_gauss()?;
        Ok(DiagnosticRecord {
            step: self.step_index,
            time: self.time(),
            charge: total_charge(&self.f),
            linf: lq_norm(&self.f, f64::INFINITY)?,
            l2: lq_norm(&self.f, 2.0)?,
            kin_norm: kin,
            mod_energy: kin + self.maxwell.field_energy(&self.fields, FieldKind::Tilde),
            phys_energy: kin + self.maxwell.field_energy(&self.fields, FieldKind::Mollified),
            rho43: weighted_lq_norm(&moments.rho, xv, 4.0 / 3.0)?,
            j43: weighted_lq_norm(&j_abs, xv, 4.0 / 3.0)?,
            gauss_res: residual.gauss_norm,
            divb_res: residual.div_b_norm,
            clip_tally: self.tally.clipped_mass + self.tally.renormalized_mass,
            support_margin: support_margin(&self.f, SUPPORT_THRESHOLD),
        })
    }

    pub fn frame(&self) -> Frame {
        Frame {
            step: self.step_index,
            time: self.time(),
            f: self.f.clone(),
            fields: self.fields.clone(),
        }
    }

    fn write_snapshots(&self, dir: &Path) -> Result<()> {
        let s = self.step_index;
        let t = self.time();
        write_distribution(&dir.join(format!("f_{s:06}.bin")), &self.f)?;
        write_vector_field(&dir.join(format!("e_tilde_{s:06}.bin")), &self.grid, &self.fields.e_tilde, t)?;
        write_vector_field(&dir.join(format!("b_tilde_{s:06}.bin")), &self.grid, &self.fields.b_tilde, t)?;
        write_vector_field(&dir.join(format!("e_{s:06}.bin")), &self.grid, &self.fields.e, t)?;
        write_vector_field(&dir.join(format!("b_{s:06}.bin")), &self.grid, &self.fields.b, t)?;
        Ok(())
    }
}

/// A saved state of a run.
#[derive(Clone, Debug)]
pub struct Frame {
    pub step: u64,
    pub time: f64,
    pub f: DistributionFunction,
    pub fields: FieldState,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<DiagnosticRecord>,
    pub frames: Vec<Frame>,
    pub final_state: Simulation,
}

fn is_save_step(step: u64, total: u64, every: usize) -> bool {
    step % every as u64 == 0 || step == total
}

/// Steps a run to `t_final`, recording diagnostics and frames at the save
/// cadence. With an output directory the CSV (and optionally snapshots) are
/// written; on failure the rows gathered so far are flushed first.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    run_with(config, true)
}

pub fn run_with(config: &RunConfig, keep_frames: bool) -> Result<RunOutput> {
    let mut sim = Simulation::new(config)?;
    let (total, _) = config.schedule();
    let dir = config.output_dir.clone();
    if let Some(d) = &dir {
        std::fs::create_dir_all(d)?;
    }
    let mut records = Vec::new();
    let mut frames = Vec::new();
    let save = |sim: &Simulation, records: &mut Vec<DiagnosticRecord>, frames: &mut Vec<Frame>| -> Result<()> {
        records.push(sim.record()?);
        if keep_frames {
            frames.push(sim.frame());
        }
        if let (Some(d), true) = (&dir, config.write_snapshots) {
            sim.write_snapshots(d)?;
        }
        Ok(())
    };
    let outcome = (|| -> Result<()> {
        save(&sim, &mut records, &mut frames)?;
        while sim.step_index() < total {
            sim.step()?;
            if is_save_step(sim.step_index(), total, config.save_every) {
                save(&sim, &mut records, &mut frames)?;
            }
        }
        Ok(())
    })();
    if let Some(d) = &config.output_dir {
        write_csv(&d.join("diagnostics.csv"), &records)?;
    }
    if let Err(e) = outcome {
        log::error!("run aborted in the step starting at t = {}: {e}", sim.time());
        return Err(e);
    }
    Ok(RunOutput {
        records,
        frames,
        final_state: sim,
    })
}

/// The six monitored norms at one save time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformQuantities {
    pub time: f64,
    pub kin_norm: f64,
    pub linf: f64,
    pub e_l2: f64,
    pub b_l2: f64,
    pub rho43: f64,
    pub j43: f64,
}

impl UniformQuantities {
    pub fn max(&self) -> f64 {
        [self.kin_norm, self.linf, self.e_l2, self.b_l2, self.rho43, self.j43]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct SequenceMember {
    pub n: i64,
    pub samples: Vec<UniformQuantities>,
    pub records: Vec<DiagnosticRecord>,
}

#[derive(Clone, Debug)]
pub struct SequenceReport {
    pub members: Vec<SequenceMember>,
    /// Bound derived from the initial data; the flag tests against twice it.
    pub constant: f64,
    pub uniform: bool,
    /// For each successive pair, the largest `L²` distance of `(E, B)` over
    /// the save times.
    pub field_distances: Vec<f64>,
    /// For each successive pair, `‖f_a − f_b‖₂` at the final time.
    pub final_f_distances: Vec<f64>,
    /// Distances beyond the coarsest pair are non-increasing.
    pub distances_non_increasing: bool,
}

fn l2_distance(a: &[f64], b: &[f64], weight: f64) -> f64 {
    (pairwise_sum(&a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect::<Vec<_>>()) * weight).sqrt()
}

/// `max(W₀, ‖f̊‖_∞, √(8πW₀), C_f W₀^{3/4})` with `W₀` the initial modified
/// energy and `C_f = (4π/3)‖f̊‖_∞ + 1`.
pub fn uniform_constant(initial_modified_energy: f64, initial_linf: f64) -> f64 {
    let w = initial_modified_energy;
    let cf = 4.0 * PI / 3.0 * initial_linf + 1.0;
    [w, initial_linf, (8.0 * PI * w).sqrt(), cf * w.powf(0.75)]
        .into_iter()
        .fold(0.0, f64::max)
}

pub fn run_sequence(base: &RunConfig, n_list: &[i64]) -> Result<SequenceReport> {
    let mut cfg = base.clone();
    cfg.n_list = n_list.to_vec();
    cfg.validate()?;
    let (total, _) = cfg.schedule();
    let outcomes: Vec<Result<(SequenceMember, Vec<VectorField>, Vec<VectorField>, DistributionFunction, f64, f64)>> = n_list
        .par_iter()
        .map(|&n| {
            let mut sim = Simulation::with_scale(&cfg, n)?;
            let w0 = sim.modified_energy()?;
            let linf0 = lq_norm(sim.f(), f64::INFINITY)?;
            let mut samples = Vec::new();
            let mut records = Vec::new();
            let mut es = Vec::new();
            let mut bs = Vec::new();
            loop {
                if is_save_step(sim.step_index(), total, cfg.save_every) {
                    let r = sim.record()?;
                    let xv = sim.grid().x_volume();
                    samples.push(UniformQuantities {
                        time: sim.time(),
                        kin_norm: r.kin_norm,
                        linf: r.linf,
                        e_l2: vector_lq_norm(&sim.fields().e, xv, 2.0)?,
                        b_l2: vector_lq_norm(&sim.fields().b, xv, 2.0)?,
                        rho43: r.rho43,
                        j43: r.j43,
                    });
                    records.push(r);
                    es.push(sim.fields().e.clone());
                    bs.push(sim.fields().b.clone());
                }
                if sim.step_index() >= total {
                    break;
                }
                sim.step()?;
            }
            Ok((SequenceMember { n, samples, records }, es, bs, sim.f().clone(), w0, linf0))
        })
        .collect();
    let mut members = Vec::new();
    let mut fields = Vec::new();
    let mut finals = Vec::new();
    let mut w0 = 0.0;
    let mut linf0 = 0.0;
    for o in outcomes {
        let (m, e, b, f, w, l) = o?;
        members.push(m);
        fields.push((e, b));
        finals.push(f);
        w0 = w;
        linf0 = l;
    }
    let constant = uniform_constant(w0, linf0);
    let uniform = members
        .iter()
        .flat_map(|m| &m.samples)
        .all(|s| s.max() <= 2.0 * constant);
    let grid = cfg.grid()?;
    let xv = grid.x_volume();
    let mut field_distances = Vec::new();
    let mut final_f_distances = Vec::new();
    for k in 1..members.len() {
        let (ea, ba) = &fields[k - 1];
        let (eb, bb) = &fields[k];
        let mut worst = 0.0_f64;
        for s in 0..ea.len() {
            let mut d2 = 0.0;
            for a in 0..3 {
                d2 += l2_distance(&ea[s][a], &eb[s][a], xv).powi(2) + l2_distance(&ba[s][a], &bb[s][a], xv).powi(2);
            }
            worst = worst.max(d2.sqrt());
        }
        field_distances.push(worst);
        final_f_distances.push(l2_distance(finals[k - 1].values(), finals[k].values(), grid.cell_volume()));
    }
    let distances_non_increasing = field_distances.iter().skip(1).collect::<Vec<_>>().windows(2).all(|w| w[1] <= w[0]);
    Ok(SequenceReport {
        members,
        constant,
        uniform,
        field_distances,
        final_f_distances,
        distances_non_increasing,
    })
}
