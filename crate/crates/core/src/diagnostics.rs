//! Conservation laws, a-priori bounds and inequalities evaluated on
//! simulation states and histories.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::cutoff::{bump, bump_derivative};
use crate::maxwell::FieldState;
use crate::mollifier::ScaledMollifier;
use crate::numerics::pairwise_sum;
use crate::phase_space::{
    compute_energy_densities, compute_moments, cross, lorentz_factor, lq_norm, momentum_map, weighted_lq_norm,
    DistributionFunction, PhaseGrid,
};
use crate::regularized::Frame;
use crate::{Error, Result};

/// Column order of `diagnostics.csv`.
pub const CSV_COLUMNS: [&str; 14] = [
    "step",
    "time",
    "charge",
    "linf",
    "l2",
    "kin_norm",
    "mod_energy",
    "phys_energy",
    "rho43",
    "j43",
    "gauss_res",
    "divb_res",
    "clip_tally",
    "support_margin",
];

/// One row of `diagnostics.csv`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiagnosticRecord {
    pub step: u64,
    pub time: f64,
    pub charge: f64,
    pub linf: f64,
    pub l2: f64,
    pub kin_norm: f64,
    pub mod_energy: f64,
    pub phys_energy: f64,
    pub rho43: f64,
    pub j43: f64,
    /// `‖div Ẽ − 4π d_n ∗ (ρ − ρ̄)‖₂`, invariant under the regularized flow.
    pub gauss_res: f64,
    pub divb_res: f64,
    /// Cumulative clipped plus renormalised mass.
    pub clip_tally: f64,
    pub support_margin: f64,
}

impl DiagnosticRecord {
    fn floats(&self) -> [f64; 13] {
        [
            self.time,
            self.charge,
            self.linf,
            self.l2,
            self.kin_norm,
            self.mod_energy,
            self.phys_energy,
            self.rho43,
            self.j43,
            self.gauss_res,
            self.divb_res,
            self.clip_tally,
            self.support_margin,
        ]
    }

    fn from_floats(step: u64, v: [f64; 13]) -> Self {
        Self {
            step,
            time: v[0],
            charge: v[1],
            linf: v[2],
            l2: v[3],
            kin_norm: v[4],
            mod_energy: v[5],
            phys_energy: v[6],
            rho43: v[7],
            j43: v[8],
            gauss_res: v[9],
            divb_res: v[10],
            clip_tally: v[11],
            support_margin: v[12],
        }
    }

    pub fn csv_line(&self) -> String {
        let mut line = self.step.to_string();
        for v in self.floats() {
            write!(line, ",{v:.17e}").expect("writing to a string");
        }
        line
    }
}

pub fn csv_header() -> String {
    CSV_COLUMNS.join(",")
}

pub fn write_csv(path: &Path, records: &[DiagnosticRecord]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{}", csv_header())?;
    for r in records {
        writeln!(w, "{}", r.csv_line())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<DiagnosticRecord>> {
    let reader = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))??;
    if header.trim() != csv_header() {
        return Err(Error::Format(format!("unexpected CSV header: {header}")));
    }
    let mut out = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != CSV_COLUMNS.len() {
            return Err(Error::Format(format!("row {} has {} columns", row + 1, cells.len())));
        }
        let step = cells[0]
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::Format(format!("row {} step: {e}", row + 1)))?;
        let mut v = [0.0; 13];
        for (k, cell) in cells[1..].iter().enumerate() {
            v[k] = cell
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("row {} {}: {e}", row + 1, CSV_COLUMNS[k + 1])))?;
        }
        out.push(DiagnosticRecord::from_floats(step, v));
    }
    Ok(out)
}

/// One line of a PASS/FAIL summary.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckLine {
    /// Passes when `value ≤ threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    /// Passes when `value ≥ threshold`.
    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            pass: value >= threshold,
        }
    }

    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {:.6e} {:.6e} {}", self.name, self.value, self.threshold, self.verdict())
    }
}

pub fn write_summary(path: &Path, lines: &[CheckLine]) -> Result<()> {
    let mut text = String::new();
    for l in lines {
        writeln!(text, "{l}").expect("writing to a string");
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Time series of the conserved and bounded quantities of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct ConservationReport {
    pub times: Vec<f64>,
    pub charge: Vec<f64>,
    pub l2: Vec<f64>,
    pub linf: Vec<f64>,
    pub mod_energy: Vec<f64>,
    /// `max_t |Q(t) − Q(0)| / |Q(0)|` (absolute when `Q(0) = 0`).
    pub charge_drift: f64,
    pub l2_drift: f64,
    pub mod_energy_drift: f64,
    pub linf_nonincreasing: bool,
    /// `‖j‖_{4/3} ≤ ‖ρ‖_{4/3}` at every record.
    pub current_bounded: bool,
    /// Final cumulative limiter tally relative to the initial charge.
    pub relative_tally: f64,
    /// Smallest `mod_energy − phys_energy` relative to the modified energy.
    pub domination_margin: f64,
}

fn relative_drift(series: &[f64]) -> f64 {
    let Some(&first) = series.first() else {
        return 0.0;
    };
    let scale = if first == 0.0 { 1.0 } else { first.abs() };
    series.iter().map(|v| (v - first).abs() / scale).fold(0.0, f64::max)
}

pub fn conservation_suite(records: &[DiagnosticRecord]) -> ConservationReport {
    let col = |f: fn(&DiagnosticRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
    let charge = col(|r| r.charge);
    let linf = col(|r| r.linf);
    let mod_energy = col(|r| r.mod_energy);
    let l2 = col(|r| r.l2);
    let q0 = charge.first().copied().unwrap_or(0.0);
    let tally = records.last().map_or(0.0, |r| r.clip_tally);
    ConservationReport {
        times: col(|r| r.time),
        charge_drift: relative_drift(&charge),
        l2_drift: relative_drift(&l2),
        mod_energy_drift: relative_drift(&mod_energy),
        linf_nonincreasing: linf.windows(2).all(|w| w[1] <= w[0]),
        current_bounded: records.iter().all(|r| r.j43 <= r.rho43),
        relative_tally: if q0 > 0.0 { tally / q0 } else { tally },
        domination_margin: records
            .iter()
            .map(|r| energy_domination_margin(r) / r.mod_energy.abs().max(f64::MIN_POSITIVE))
            .fold(f64::INFINITY, f64::min),
        charge,
        l2,
        linf,
        mod_energy,
    }
}

/// `modified_energy − (kinetic_norm + field_energy(mollified))`.
pub fn energy_domination_margin(record: &DiagnosticRecord) -> f64 {
    record.mod_energy - record.phys_energy
}

/// Tolerances of the CSV-level checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecordTolerances {
    pub charge: f64,
    pub domination: f64,
    pub div_b: f64,
}

impl Default for RecordTolerances {
    fn default() -> Self {
        Self {
            charge: 1e-10,
            domination: 1e-12,
            div_b: 1e-12,
        }
    }
}

/// The checks that only need `diagnostics.csv`.
pub fn record_checks(records: &[DiagnosticRecord], tol: RecordTolerances) -> Vec<CheckLine> {
    let report = conservation_suite(records);
    let linf_rise = report
        .linf
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let div_b = records.iter().map(|r| r.divb_res).fold(0.0, f64::max);
    let margin = records.iter().map(|r| r.support_margin).fold(f64::INFINITY, f64::min);
    let current = records.iter().map(|r| r.j43 - r.rho43).fold(f64::NEG_INFINITY, f64::max);
    vec![
        CheckLine::at_most("charge", report.charge_drift, tol.charge),
        CheckLine::at_most("linf_monotone", linf_rise, 0.0),
        CheckLine::at_least("energy_domination", report.domination_margin, -tol.domination),
        CheckLine::at_most("div_b", div_b, tol.div_b),
        CheckLine::at_least("support_margin", margin, 0.0),
        CheckLine::at_most("current_bound", current.max(f64::MIN), 0.0),
    ]
}

/// Pointwise margins of `ρ ≤ C_f K^{3/4}` with `K = ∫ γ f dp` and
/// `C_f = (4π/3)‖f‖_∞ + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationCheck {
    pub constant: f64,
    pub rho: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub margins: Vec<f64>,
    pub min_margin: f64,
}

pub fn rho_interpolation_check(f: &DistributionFunction) -> Result<InterpolationCheck> {
    let grid = f.grid();
    let constant = 4.0 * PI / 3.0 * lq_norm(f, f64::INFINITY)? + 1.0;
    let rho = compute_moments(f, 1.0)?.rho;
    let gammas: Vec<f64> = grid.momenta().into_iter().map(lorentz_factor).collect();
    let dp = grid.p_volume();
    let kinetic: Vec<f64> = (0..grid.n_x())
        .map(|ix| {
            let row = f.row(ix);
            crate::numerics::pairwise_sum_by(row.len(), |k| gammas[k] * row[k]) * dp
        })
        .collect();
    let margins: Vec<f64> = rho
        .iter()
        .zip(&kinetic)
        .map(|(r, k)| constant * k.max(0.0).powf(0.75) - r)
        .collect();
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(InterpolationCheck {
        constant,
        rho,
        kinetic,
        margins,
        min_margin,
    })
}

/// Residual norms of the local balance laws, maximised over interior frames.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalResiduals {
    /// `∂_t ρ + div j` for `q = 1`.
    pub charge: f64,
    /// `∂_t ρ₂ + div j₂` with `ρ₂ = ∫ f² dp`.
    pub charge_q2: f64,
    /// `∂_t e + div σ − j·E + (d_n ∗ j)·Ẽ` with the tilde-field energy and flux.
    pub energy: f64,
}

fn uniform_spacing(frames: &[Frame]) -> Result<f64> {
    if frames.len() < 3 {
        return Err(Error::History("at least three frames are required".into()));
    }
    let dt = frames[1].time - frames[0].time;
    if dt == 0.0 || frames.windows(2).any(|w| ((w[1].time - w[0].time) - dt).abs() > 1e-9 * dt.abs()) {
        return Err(Error::History("frames must be equally spaced in time".into()));
    }
    Ok(dt)
}

fn l2_norm(values: &[f64], weight: f64) -> f64 {
    (pairwise_sum(&values.iter().map(|v| v * v).collect::<Vec<_>>()) * weight).sqrt()
}

pub fn local_conservation_residuals(frames: &[Frame], mollifier: &ScaledMollifier) -> Result<LocalResiduals> {
    let dt = uniform_spacing(frames)?;
    let grid = frames[0].f.grid();
    let spectral = mollifier.spectral();
    let xv = grid.x_volume();
    let n_x = grid.n_x();
    let per_frame: Vec<Result<[f64; 3]>> = (1..frames.len() - 1)
        .into_par_iter()
        .map(|k| {
            let (prev, cur, next) = (&frames[k - 1], &frames[k], &frames[k + 1]);
            let mut out = [0.0; 3];
            for (slot, q) in [(0usize, 1.0), (1, 2.0)] {
                let a = compute_moments(&prev.f, q)?.rho;
                let b = compute_moments(&next.f, q)?.rho;
                let m = compute_moments(&cur.f, q)?;
                let div = spectral.divergence(&m.j);
                let r: Vec<f64> = (0..n_x).map(|i| (b[i] - a[i]) / (2.0 * dt) + div[i]).collect();
                out[slot] = l2_norm(&r, xv);
            }
            let energy = |fr: &Frame| compute_energy_densities(&fr.f, &fr.fields.e_tilde, &fr.fields.b_tilde);
            let ea = energy(prev)?.e;
            let eb = energy(next)?.e;
            let ec = energy(cur)?;
            let div = spectral.divergence(&ec.sigma);
            let j = compute_moments(&cur.f, 1.0)?.j;
            let jm = mollifier.convolve_vector(&j, 1)?;
            let fs: &FieldState = &cur.fields;
            let r: Vec<f64> = (0..n_x)
                .map(|i| {
                    let work: f64 = (0..3).map(|a| j[a][i] * fs.e[a][i] - jm[a][i] * fs.e_tilde[a][i]).sum();
                    (eb[i] - ea[i]) / (2.0 * dt) + div[i] - work
                })
                .collect();
            out[2] = l2_norm(&r, xv);
            Ok(out)
        })
        .collect();
    let mut worst = [0.0_f64; 3];
    for r in per_frame {
        let r = r?;
        for a in 0..3 {
            worst[a] = worst[a].max(r[a]);
        }
    }
    Ok(LocalResiduals {
        charge: worst[0],
        charge_q2: worst[1],
        energy: worst[2],
    })
}

/// Both sides of `∫_{|x−c|>R+|t|} ρ(t) ≤ ∫_{|x−c|>R} ρ̊` at one frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagationMargin {
    pub radius: f64,
    pub time: f64,
    pub outside_now: f64,
    pub outside_initially: f64,
    /// Charge of the cells whose centres lie within one cell diagonal
    /// outside the moving sphere.
    pub slack_band: f64,
    pub total: f64,
}

impl PropagationMargin {
    pub fn margin(&self) -> f64 {
        self.outside_initially - self.outside_now
    }

    /// Holds up to `1e-8` of the total charge plus the slack band.
    pub fn holds(&self) -> bool {
        self.outside_now <= self.outside_initially + 1e-8 * self.total + self.slack_band
    }
}

/// Minimal-image distance over the non-degenerate axes.
fn periodic_distance(grid: &PhaseGrid, x: [f64; 3], centre: [f64; 3]) -> f64 {
    let l = grid.spatial_lengths();
    let cells = grid.spatial_cells();
    let mut d2 = 0.0;
    for a in 0..3 {
        if cells[a] > 1 {
            let d = x[a] - centre[a];
            let d = d - l[a] * (d / l[a]).round();
            d2 += d * d;
        }
    }
    d2.sqrt()
}

pub fn finite_propagation_check(frames: &[Frame], radii: &[f64], centre: [f64; 3]) -> Result<Vec<PropagationMargin>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::History("no frames".into()))?;
    let grid = first.f.grid();
    let cells = grid.spatial_cells();
    let dx = grid.dx();
    let active: Vec<usize> = (0..3).filter(|&a| cells[a] > 1).collect();
    let half_period = active
        .iter()
        .map(|&a| 0.5 * grid.spatial_lengths()[a])
        .fold(f64::INFINITY, f64::min);
    let diagonal = active.iter().map(|&a| dx[a] * dx[a]).sum::<f64>().sqrt();
    let t0 = first.time;
    for &r in radii {
        for fr in frames {
            let reach = r + (fr.time - t0).abs();
            if reach + diagonal >= half_period {
                return Err(Error::RadiusTooLarge {
                    radius: r,
                    time: fr.time,
                    half_period,
                });
            }
        }
    }
    let xv = grid.x_volume();
    let distances: Vec<f64> = (0..grid.n_x())
        .map(|ix| periodic_distance(grid, grid.x_coord(ix), centre))
        .collect();
    let rho0 = compute_moments(&first.f, 1.0)?.rho;
    let total = pairwise_sum(&rho0) * xv;
    let outside = |rho: &[f64], lo: f64, hi: f64| -> f64 {
        let v: Vec<f64> = rho
            .iter()
            .zip(&distances)
            .map(|(r, d)| if *d > lo && *d <= hi { *r } else { 0.0 })
            .collect();
        pairwise_sum(&v) * xv
    };
    let rhos: Vec<Vec<f64>> = frames
        .par_iter()
        .map(|fr| compute_moments(&fr.f, 1.0).map(|m| m.rho))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for &r in radii {
        let outside_initially = outside(&rho0, r, f64::INFINITY);
        for (fr, rho) in frames.iter().zip(&rhos) {
            let reach = r + (fr.time - t0).abs();
            out.push(PropagationMargin {
                radius: r,
                time: fr.time,
                outside_now: outside(rho, reach, f64::INFINITY),
                outside_initially,
                slack_band: outside(rho, reach, reach + diagonal),
                total,
            });
        }
    }
    Ok(out)
}

/// `φ(t, x, p) = φ₀(t) φ₁(x) φ₂(p)`, each factor a product of scaled bumps
/// over the non-degenerate axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestFunction {
    pub t_centre: f64,
    pub t_width: f64,
    pub x_centre: [f64; 3],
    pub x_width: f64,
    pub p_centre: [f64; 3],
    pub p_width: f64,
}

impl TestFunction {
    pub fn time_factor(&self, t: f64) -> (f64, f64) {
        let u = (t - self.t_centre) / self.t_width;
        (bump(u), bump_derivative(u) / self.t_width)
    }

    fn product(centre: [f64; 3], width: f64, y: [f64; 3], active: [bool; 3]) -> (f64, [f64; 3]) {
        let mut vals = [1.0; 3];
        let mut ders = [0.0; 3];
        for a in 0..3 {
            if active[a] {
                let u = (y[a] - centre[a]) / width;
                vals[a] = bump(u);
                ders[a] = bump_derivative(u) / width;
            }
        }
        let value = vals[0] * vals[1] * vals[2];
        let grad = [
            ders[0] * vals[1] * vals[2],
            vals[0] * ders[1] * vals[2],
            vals[0] * vals[1] * ders[2],
        ];
        (value, grad)
    }

    fn check_support(&self, grid: &PhaseGrid) -> Result<()> {
        let l = grid.spatial_lengths();
        let cells = grid.spatial_cells();
        let pc = grid.momentum_cells();
        let p_max = grid.momentum_halfwidth();
        for a in 0..3 {
            if cells[a] > 1 && (self.x_centre[a] - self.x_width <= 0.0 || self.x_centre[a] + self.x_width >= l[a]) {
                return Err(Error::SupportOutsideDomain(format!("spatial support along axis {a}")));
            }
            if pc[a] > 1 && self.p_centre[a].abs() + self.p_width >= p_max {
                return Err(Error::SupportOutsideDomain(format!("momentum support along axis {a}")));
            }
        }
        Ok(())
    }
}

/// Per-test-function weak residuals of a history.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakResidual {
    /// `max_t |∫∫ f(t) φ₁φ₂ − ⟨f̃(t), φ₁φ₂⟩|`.
    pub representative: f64,
    /// `|∫∫∫ f (∂_t φ + p̂·∂_x φ + (E + p̂×B)·∂_p φ)|`.
    pub space_time: f64,
}

/// Pairing `∫∫ f φ₁φ₂` and `∫∫ f [p̂·∂_x + (E + p̂×B)·∂_p](φ₁φ₂)` for one frame.
fn frame_pairings(frame: &Frame, phi: &TestFunction) -> (f64, f64) {
    let grid = frame.f.grid();
    let xa = grid.spatial_cells().map(|c| c > 1);
    let pa = grid.momentum_cells().map(|c| c > 1);
    let momenta = grid.momenta();
    let n_p = grid.n_p();
    let parts: Vec<(f64, f64)> = (0..grid.n_x())
        .into_par_iter()
        .map(|ix| {
            let (phi1, grad1) = TestFunction::product(phi.x_centre, phi.x_width, grid.x_coord(ix), xa);
            let e = [frame.fields.e[0][ix], frame.fields.e[1][ix], frame.fields.e[2][ix]];
            let b = [frame.fields.b[0][ix], frame.fields.b[1][ix], frame.fields.b[2][ix]];
            let row = frame.f.row(ix);
            let mut plain = Vec::with_capacity(n_p);
            let mut flow = Vec::with_capacity(n_p);
            for (ip, &fv) in row.iter().enumerate() {
                if fv == 0.0 {
                    continue;
                }
                let p = momenta[ip];
                let (phi2, grad2) = TestFunction::product(phi.p_centre, phi.p_width, p, pa);
                let v = momentum_map(p);
                let lorentz = cross(v, b);
                let mut dir = 0.0;
                for a in 0..3 {
                    dir += v[a] * grad1[a] * phi2 + (e[a] + lorentz[a]) * phi1 * grad2[a];
                }
                plain.push(fv * phi1 * phi2);
                flow.push(fv * dir);
            }
            (pairwise_sum(&plain), pairwise_sum(&flow))
        })
        .collect();
    let vol = grid.cell_volume();
    (
        pairwise_sum(&parts.iter().map(|p| p.0).collect::<Vec<_>>()) * vol,
        pairwise_sum(&parts.iter().map(|p| p.1).collect::<Vec<_>>()) * vol,
    )
}

pub fn weak_residual(frames: &[Frame], phis: &[TestFunction]) -> Result<Vec<WeakResidual>> {
    if frames.len() < 2 {
        return Err(Error::History("at least two frames are required".into()));
    }
    let grid = frames[0].f.grid();
    let (t_first, t_last) = (frames[0].time, frames[frames.len() - 1].time);
    for phi in phis {
        phi.check_support(grid)?;
        let (lo, hi) = (phi.t_centre - phi.t_width, phi.t_centre + phi.t_width);
        if lo < t_first.min(t_last) || hi > t_first.max(t_last) {
            return Err(Error::SupportOutsideDomain("time support".into()));
        }
    }
    phis.par_iter()
        .map(|phi| {
            let pairs: Vec<(f64, f64)> = frames.iter().map(|fr| frame_pairings(fr, phi)).collect();
            let mut integral = 0.0;
            let mut worst = 0.0_f64;
            for k in 1..frames.len() {
                let h = frames[k].time - frames[k - 1].time;
                integral += 0.5 * h * (pairs[k - 1].1 + pairs[k].1);
                let r = pairs[k].0 - pairs[0].0 - integral;
                worst = worst.max(r.abs());
            }
            let integrand: Vec<f64> = frames
                .iter()
                .zip(&pairs)
                .map(|(fr, pr)| {
                    let (w, dw) = phi.time_factor(fr.time);
                    dw * pr.0 + w * pr.1
                })
                .collect();
            let mut st = 0.0;
            for k in 1..frames.len() {
                st += 0.5 * (frames[k].time - frames[k - 1].time) * (integrand[k - 1] + integrand[k]);
            }
            Ok(WeakResidual {
                representative: worst,
                space_time: st.abs(),
            })
        })
        .collect()
}

/// Mean `‖f(t_{k+lag}) − f(t_k)‖_q` over the frames, for each lag.
pub fn lq_continuity(frames: &[Frame], q: f64, lags: &[usize]) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for &lag in lags {
        if lag == 0 || lag >= frames.len() {
            continue;
        }
        let mut dists = Vec::new();
        let mut gaps = Vec::new();
        for k in 0..frames.len() - lag {
            let a = &frames[k];
            let b = &frames[k + lag];
            let diff: Vec<f64> = a.f.values().iter().zip(b.f.values()).map(|(x, y)| x - y).collect();
            dists.push(weighted_lq_norm(&diff, a.f.grid().cell_volume(), q)?);
            gaps.push((b.time - a.time).abs());
        }
        let n = dists.len() as f64;
        out.push((pairwise_sum(&gaps) / n, pairwise_sum(&dists) / n));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularized::{run, PresetKind, RunConfig};

    fn tiny(preset: PresetKind) -> RunConfig {
        RunConfig {
            spatial_cells: [16, 1, 1],
            momentum_cells: [16, 16, 1],
            dt: 0.1,
            t_final: 0.4,
            preset,
            ..RunConfig::default()
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let out = run(&tiny(PresetKind::MaxwellianBump)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_csv(&path, &out.records).unwrap();
        assert_eq!(read_csv(&path).unwrap(), out.records);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("step,time,charge,linf,l2,kin_norm,mod_energy,phys_energy,rho43,j43,gauss_res,divb_res,clip_tally,support_margin\n"));
    }

    #[test]
    fn zero_run_is_trivially_consistent() {
        let out = run(&tiny(PresetKind::Zero)).unwrap();
        let report = conservation_suite(&out.records);
        assert_eq!(report.charge_drift, 0.0);
        assert!(report.linf_nonincreasing);
        let check = rho_interpolation_check(&out.frames[0].f).unwrap();
        assert_eq!(check.min_margin, 0.0);
        let props = finite_propagation_check(&out.frames, &[1.0], [2.0 * PI, 0.5, 0.5]).unwrap();
        assert!(props.iter().all(|m| m.outside_now == 0.0 && m.holds()));
        let phi = TestFunction {
            t_centre: 0.2,
            t_width: 0.2,
            x_centre: [6.0, 0.5, 0.5],
            x_width: 2.0,
            p_centre: [0.0; 3],
            p_width: 2.0,
        };
        let w = weak_residual(&out.frames, &[phi]).unwrap();
        assert_eq!(w[0].representative, 0.0);
        assert_eq!(w[0].space_time, 0.0);
    }

    #[test]
    fn oversized_radius_and_support_are_rejected() {
        let out = run(&tiny(PresetKind::MaxwellianBump)).unwrap();
        assert!(matches!(
            finite_propagation_check(&out.frames, &[6.0], [2.0 * PI, 0.5, 0.5]),
            Err(Error::RadiusTooLarge { .. })
        ));
        let phi = TestFunction {
            t_centre: 0.2,
            t_width: 0.2,
            x_centre: [0.5, 0.5, 0.5],
            x_width: 1.0,
            p_centre: [0.0; 3],
            p_width: 2.0,
        };
        assert!(matches!(weak_residual(&out.frames, &[phi]), Err(Error::SupportOutsideDomain(_))));
    }

    #[test]
    fn tampered_charge_fails_the_charge_check() {
        let out = run(&tiny(PresetKind::MaxwellianBump)).unwrap();
        let lines = record_checks(&out.records, RecordTolerances::default());
        assert!(lines.iter().all(|l| l.pass), "{lines:?}");
        let mut bad = out.records.clone();
        bad[2].charge *= 1.0 + 1e-3;
        let lines = record_checks(&bad, RecordTolerances::default());
        let failed: Vec<_> = lines.iter().filter(|l| !l.pass).map(|l| l.name.as_str()).collect();
        assert_eq!(failed, ["charge"]);
    }

    #[test]
    fn test_function_gradients_match_differences() {
        let active = [true, true, false];
        let c = [1.0, -0.5, 0.0];
        let y = [1.3, -0.2, 7.0];
        let (_, grad) = TestFunction::product(c, 0.8, y, active);
        let h = 1e-6;
        for a in 0..2 {
            let mut up = y;
            let mut down = y;
            up[a] += h;
            down[a] -= h;
            let fd = (TestFunction::product(c, 0.8, up, active).0 - TestFunction::product(c, 0.8, down, active).0) / (2.0 * h);
            assert!((fd - grad[a]).abs() < 1e-8);
        }
        assert_eq!(grad[2], 0.0);
    }

    #[test]
    fn check_lines_format() {
        let l = CheckLine::at_most("charge", 1e-12, 1e-10);
        assert_eq!(l.to_string(), "charge 1.000000e-12 1.000000e-10 PASS");
        assert!(!CheckLine::at_least("margin", -1.0, 0.0).pass);
    }
}
