//! Acceptance suite. Every criterion prints one line per sub-check and a
//! final `criterion NN ... PASS|FAIL` line, then asserts.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use rvm::averaging::{
    fourier_transport_residual, free_streaming_triple, make_triple_from_run, physical_transport_residual,
    random_triple, spectrum, verify_lemma, LabelledTriple, TransportTriple, TripleGeometry, TripleResolution,
};
use rvm::diagnostics::{
    conservation_suite, finite_propagation_check, rho_interpolation_check, weak_residual, CheckLine, TestFunction,
};
use rvm::phase_space::{lq_norm, DistributionFunction, PhaseGrid};
use rvm::regularized::{run_sequence, run_with, PresetKind, RunConfig, RunOutput};

const PRESETS: [PresetKind; 4] = [
    PresetKind::MaxwellianBump,
    PresetKind::TwoStream,
    PresetKind::LocalizedBump,
    PresetKind::Zero,
];

/// Canonical reduced geometry, 200 steps.
fn canonical(preset: PresetKind) -> RunConfig {
    RunConfig {
        preset,
        ..RunConfig::default()
    }
}

struct Canonical {
    records: RunOutput,
    frames: RunOutput,
    elapsed: Duration,
}

fn canonical_run(preset: PresetKind) -> &'static Canonical {
    static CACHE: OnceLock<Mutex<HashMap<&'static str, &'static Canonical>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(c) = cache.lock().unwrap().get(preset.name()) {
        return c;
    }
    let start = Instant::now();
    let records = run_with(&canonical(preset), false).expect("canonical run");
    let elapsed = start.elapsed();
    let frames = run_with(
        &RunConfig {
            save_every: 10,
            ..canonical(preset)
        },
        true,
    )
    .expect("canonical run with frames");
    let entry: &'static Canonical = Box::leak(Box::new(Canonical {
        records,
        frames,
        elapsed,
    }));
    *cache.lock().unwrap().entry(preset.name()).or_insert(entry)
}

struct Verdict {
    number: u32,
    title: &'static str,
    lines: Vec<CheckLine>,
}

impl Verdict {
    fn new(number: u32, title: &'static str) -> Self {
        Self {
            number,
            title,
            lines: Vec::new(),
        }
    }

    fn push(&mut self, line: CheckLine) {
        println!("  c{:02}.{line}", self.number);
        self.lines.push(line);
    }

    fn at_most(&mut self, name: &str, value: f64, threshold: f64) {
        self.push(CheckLine::at_most(name, value, threshold));
    }

    fn at_least(&mut self, name: &str, value: f64, threshold: f64) {
        self.push(CheckLine::at_least(name, value, threshold));
    }

    fn finish(self) {
        let failed: Vec<&str> = self.lines.iter().filter(|l| !l.pass).map(|l| l.name.as_str()).collect();
        let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {:02} {} {verdict}", self.number, self.title);
        assert!(failed.is_empty(), "criterion {} failed: {failed:?}", self.number);
    }
}

/// Order from a three-point ladder `r(h), r(h/2), r(h/4)`:
/// `log₂(|r₀ − r₁| / |r₁ − r₂|)`, or `None` when both differences are below
/// `floor` (converged to roundoff).
fn ladder_order(r: [f64; 3], floor: f64) -> Option<f64> {
    let d1 = (r[0] - r[1]).abs();
    let d2 = (r[1] - r[2]).abs();
    if d1 <= floor && d2 <= floor {
        return None;
    }
    Some((d1 / d2).log2())
}

fn push_order(v: &mut Verdict, name: &str, r: [f64; 3], floor: f64, required: f64) {
    println!("  c{:02}.{name}.ladder {:e} {:e} {:e}", v.number, r[0], r[1], r[2]);
    match ladder_order(r, floor) {
        Some(order) => v.at_least(name, order, required),
        None => v.push(CheckLine {
            name: format!("{name}.roundoff"),
            value: (r[0] - r[1]).abs().max((r[1] - r[2]).abs()),
            threshold: floor,
            pass: true,
        }),
    }
}

fn dt_ladder(base: &RunConfig, dts: [f64; 3], t_final: f64, keep_frames: bool) -> [RunOutput; 3] {
    dts.map(|dt| {
        run_with(
            &RunConfig {
                dt,
                t_final,
                ..base.clone()
            },
            keep_frames,
        )
        .expect("ladder run")
    })
}

#[test]
fn criterion_01_charge_conservation() {
    let mut v = Verdict::new(1, "charge conservation");
    for preset in PRESETS {
        let c = canonical_run(preset);
        let report = conservation_suite(&c.records.records);
        let steps = c.records.records.last().unwrap().step;
        v.at_least(&format!("steps.{}", preset.name()), steps as f64, 200.0);
        v.at_most(&format!("charge.{}", preset.name()), report.charge_drift, 1e-10);
        v.at_most(&format!("tally.{}", preset.name()), report.relative_tally, 1e-10);
        v.at_most(&format!("runtime_s.{}", preset.name()), c.elapsed.as_secs_f64(), 60.0);
    }
    v.finish();
}

#[test]
fn criterion_02_modified_energy() {
    let mut v = Verdict::new(2, "modified-energy conservation");
    let base = canonical(PresetKind::MaxwellianBump);
    let runs = dt_ladder(&base, [0.05, 0.025, 0.0125], 2.0, false);
    let drift = |o: &RunOutput| {
        let e0 = o.records[0].mod_energy;
        (o.records.last().unwrap().mod_energy - e0) / e0
    };
    let d = [drift(&runs[0]), drift(&runs[1]), drift(&runs[2])];
    push_order(&mut v, "energy_order", d, 1e-14, 1.9);
    let finest = conservation_suite(&runs[2].records).mod_energy_drift;
    v.at_most("energy_drift_finest", finest, 1e-6);
    v.finish();
}

#[test]
fn criterion_03_energy_domination() {
    let mut v = Verdict::new(3, "energy domination");
    for preset in PRESETS {
        let records = &canonical_run(preset).records.records;
        let worst = records
            .iter()
            .map(|r| (r.mod_energy - r.phys_energy) / r.mod_energy.abs().max(1e-300))
            .fold(f64::INFINITY, f64::min);
        let failures = records.iter().filter(|r| r.phys_energy - r.mod_energy > 1e-12 * r.mod_energy.abs()).count();
        v.at_least(&format!("margin.{}", preset.name()), if records[0].mod_energy == 0.0 { 0.0 } else { worst }, -1e-12);
        v.at_most(&format!("failures.{}", preset.name()), failures as f64, 0.0);
    }
    v.finish();
}

#[test]
fn criterion_04_interpolation_bound() {
    let mut v = Verdict::new(4, "interpolation bound");
    for preset in PRESETS {
        let frames = &canonical_run(preset).frames.frames;
        let worst = frames
            .iter()
            .map(|fr| rho_interpolation_check(&fr.f).unwrap().min_margin)
            .fold(f64::INFINITY, f64::min);
        v.at_least(&format!("min_margin.{}", preset.name()), worst, 0.0);
    }
    let grid = PhaseGrid::new([1, 1, 1], [1.0, 1.0, 1.0], [64, 64, 64], 1.25).unwrap();
    let f = DistributionFunction::from_fn(grid, 0.0, |_, p| {
        f64::from(u8::from(p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= 1.0))
    });
    let check = rho_interpolation_check(&f).unwrap();
    let bound = check.constant * check.kinetic[0].powf(0.75);
    // oracle: (4π/3 + 1)·((π/2)(3√2 − asinh 1))^{3/4}
    let oracle = (4.0 * PI / 3.0 + 1.0) * (0.5 * PI * (3.0 * 2f64.sqrt() - 1f64.asinh())).powf(0.75);
    v.at_most("indicator.rho_rel_error", (check.rho[0] - 4.0 * PI / 3.0).abs() / (4.0 * PI / 3.0), 0.01);
    v.at_most("indicator.bound_rel_error", (bound - oracle).abs() / oracle, 0.01);
    v.at_least("indicator.margin", check.min_margin, 0.0);
    v.finish();
}

#[test]
fn criterion_05_constraints() {
    let mut v = Verdict::new(5, "constraint propagation");
    let base = canonical(PresetKind::MaxwellianBump);
    let runs = dt_ladder(&base, [0.05, 0.025, 0.0125], 2.0, false);
    let growth = |o: &RunOutput| {
        let g0 = o.records[0].gauss_res;
        o.records.iter().map(|r| (r.gauss_res - g0).abs()).fold(0.0, f64::max)
    };
    let g = [growth(&runs[0]), growth(&runs[1]), growth(&runs[2])];
    push_order(&mut v, "gauss_growth_order", g, 1e-14, 1.9);
    for preset in PRESETS {
        let worst = canonical_run(preset)
            .records
            .records
            .iter()
            .map(|r| r.divb_res)
            .fold(0.0, f64::max);
        v.at_most(&format!("div_b.{}", preset.name()), worst, 1e-12);
    }
    v.finish();
}

#[test]
fn criterion_06_finite_propagation() {
    let mut v = Verdict::new(6, "finite propagation");
    let radii = [0.5, 1.0, 2.0];
    for preset in PRESETS {
        let config = canonical(preset);
        let centre = [0.5 * config.lengths[0], 0.0, 0.0];
        // R + |t| must stay below half the period for the sphere to make sense
        let frames: Vec<_> = canonical_run(preset)
            .frames
            .frames
            .iter()
            .filter(|f| f.time <= 4.0)
            .cloned()
            .collect();
        let margins = finite_propagation_check(&frames, &radii, centre).unwrap();
        let violations = margins.iter().filter(|m| !m.holds()).count();
        v.at_most(&format!("violations.{}", preset.name()), violations as f64, 0.0);
        if preset == PresetKind::LocalizedBump {
            let leak = margins
                .iter()
                .filter(|m| m.radius == config.bump_radius)
                .map(|m| (m.outside_now - m.slack_band) / m.total)
                .fold(0.0, f64::max);
            let band = margins
                .iter()
                .filter(|m| m.radius == config.bump_radius)
                .map(|m| m.slack_band / m.total)
                .fold(0.0, f64::max);
            println!("  c06.slack_band_fraction {band:e}");
            v.at_most("exact_support_leak", leak, 1e-8);
        }
    }
    v.finish();
}

#[test]
fn criterion_07_lq_behaviour() {
    let mut v = Verdict::new(7, "Lq behaviour");
    for preset in PRESETS {
        let records = &canonical_run(preset).records.records;
        let rise = records.windows(2).map(|w| w[1].linf - w[0].linf).fold(0.0, f64::max);
        v.at_most(&format!("linf_rise.{}", preset.name()), rise, 0.0);
    }
    let base = canonical(PresetKind::MaxwellianBump);
    let runs = dt_ladder(&base, [0.05, 0.025, 0.0125], 2.0, true);
    let drift = |o: &RunOutput, q: f64| {
        let first = lq_norm(&o.frames[0].f, q).unwrap();
        let last = lq_norm(&o.frames.last().unwrap().f, q).unwrap();
        (last - first).abs() / first
    };
    for (q, name) in [(1.0, "l1_order"), (2.0, "l2_order")] {
        let d = [drift(&runs[0], q), drift(&runs[1], q), drift(&runs[2], q)];
        push_order(&mut v, name, d, 1e-14, 1.9);
    }
    v.finish();
}

fn run_triple(level: usize) -> TransportTriple {
    let f = 1usize << level;
    let dt = 0.05 / f as f64;
    let config = RunConfig {
        spatial_cells: [16 * f, 1, 1],
        momentum_cells: [32 * f, 32 * f, 1],
        dt,
        t_final: dt * (32 * f - 1) as f64,
        save_every: 1,
        ..canonical(PresetKind::MaxwellianBump)
    };
    let out = run_with(&config, true).unwrap();
    make_triple_from_run(&out.frames).unwrap()
}

fn ensemble(level: usize, seed: u64) -> Vec<LabelledTriple> {
    let geo = TripleGeometry::default();
    let res = TripleResolution { nt: 16, nx: 16, np: 16 }.refined(level);
    let mut out: Vec<LabelledTriple> = (0..20)
        .map(|k| LabelledTriple {
            id: format!("random-{k}"),
            level,
            triple: random_triple(seed + k, &geo, res).unwrap(),
        })
        .collect();
    for mode in [1, 2] {
        out.push(LabelledTriple {
            id: format!("free-streaming-{mode}"),
            level,
            triple: free_streaming_triple(&geo, res, mode).unwrap(),
        });
    }
    out.push(LabelledTriple {
        id: "run".into(),
        level,
        triple: run_triple(level),
    });
    out
}

#[test]
fn criterion_08_averaging_lemma() {
    let mut v = Verdict::new(8, "momentum averaging estimate");
    let start = Instant::now();
    let psi_radius = 2.0;
    let mut max_ratio = [0.0; 2];
    for level in 0..2 {
        let triples = ensemble(level, 0);
        let report = verify_lemma(&triples, psi_radius).unwrap();
        let split = report.rows.iter().map(|r| r.split_defect).fold(0.0, f64::max);
        let violations: usize = report.rows.iter().map(|r| r.i1_violations).sum();
        let over = report.rows.iter().filter(|r| r.h14 > r.majorant).count();
        let near = report.rows.iter().filter(|r| !r.near_terms_bounded).count();
        v.at_least(&format!("triples.level{level}"), triples.len() as f64, 23.0);
        v.at_most(&format!("split_defect.level{level}"), split, 1e-12);
        v.at_most(&format!("i1_violations.level{level}"), violations as f64, 0.0);
        v.at_most(&format!("majorant_failures.level{level}"), over as f64, 0.0);
        v.at_most(&format!("near_term_failures.level{level}"), near as f64, 0.0);
        for r in &report.rows {
            println!(
                "  c08.row {} level {} ratio {:.4e} h14 {:.4e} i1_const {:.3e} far_const {:.3e}",
                r.id, r.level, r.ratio, r.h14, r.i1_constant, r.far_constant
            );
        }
        max_ratio[level] = report.max_ratio;
    }
    let variation = (max_ratio[1] / max_ratio[0]).max(max_ratio[0] / max_ratio[1]);
    v.at_most("max_ratio_variation", variation, 2.0);
    v.at_most("runtime_s", start.elapsed().as_secs_f64(), 300.0);
    v.finish();
}

#[test]
fn criterion_09_fourier_transport_identity() {
    let mut v = Verdict::new(9, "Fourier transport identity");
    let geo = TripleGeometry::default();
    let res = TripleResolution { nt: 16, nx: 16, np: 16 };
    let mut worst = 0.0_f64;
    let mut check = |t: &TransportTriple| {
        let fourier = fourier_transport_residual(&spectrum(t).unwrap());
        let physical = physical_transport_residual(t);
        let scale = t.norms().iter().sum::<f64>().max(physical);
        worst = worst.max((fourier - physical).abs() / scale);
    };
    for seed in 0..5 {
        check(&random_triple(seed, &geo, res).unwrap());
    }
    // a triple that does not solve the equation: drop g₀ from free streaming
    let mut broken = free_streaming_triple(&geo, res, 1).unwrap();
    broken.g0.iter_mut().for_each(|x| *x = 0.0);
    check(&broken);
    check(&run_triple(0));
    v.at_most("parseval_match", worst, 1e-10);
    let residuals: Vec<f64> = (0..3)
        .map(|level| {
            let t = free_streaming_triple(&geo, TripleResolution { nt: 16, nx: 8, np: 16 }.refined(level), 1).unwrap();
            physical_transport_residual(&t)
        })
        .collect();
    println!("  c09.free_streaming_residuals {residuals:?}");
    let order = (residuals[1] / residuals[2]).log2().min((residuals[0] / residuals[1]).log2());
    v.at_least("free_streaming_order", order, 2.5);
    v.finish();
}

fn test_bank(length: f64, t_final: f64) -> Vec<TestFunction> {
    let centres = [
        (0.2, [0.0, 0.0]),
        (0.35, [0.5, 0.0]),
        (0.5, [-0.5, 0.5]),
        (0.65, [1.0, 0.0]),
        (0.8, [0.0, -1.0]),
    ];
    centres
        .iter()
        .map(|&(xf, p)| TestFunction {
            t_centre: 0.5 * t_final,
            t_width: 0.45 * t_final,
            x_centre: [xf * length, 0.0, 0.0],
            x_width: 0.15 * length,
            p_centre: [p[0], p[1], 0.0],
            p_width: 2.0,
        })
        .collect()
}

#[test]
fn criterion_10_weak_residual() {
    let mut v = Verdict::new(10, "weak residual");
    let base = canonical(PresetKind::MaxwellianBump);
    let t_final = 2.0;
    let runs = dt_ladder(&base, [0.05, 0.025, 0.0125], t_final, true);
    let bank = test_bank(base.lengths[0], t_final);
    let residuals: Vec<Vec<f64>> = runs
        .iter()
        .map(|o| weak_residual(&o.frames, &bank).unwrap().iter().map(|w| w.space_time).collect())
        .collect();
    v.at_least("bank_size", bank.len() as f64, 5.0);
    for k in 0..bank.len() {
        push_order(&mut v, &format!("phi{k}_order"), [residuals[0][k], residuals[1][k], residuals[2][k]], 1e-14, 1.9);
    }
    v.finish();
}

#[test]
fn criterion_11_sequence_uniformity() {
    let mut v = Verdict::new(11, "n-sequence uniformity");
    let report = run_sequence(&canonical(PresetKind::MaxwellianBump), &[2, 4, 8, 16]).unwrap();
    let worst = report
        .members
        .iter()
        .flat_map(|m| &m.samples)
        .map(|s| s.max())
        .fold(0.0, f64::max);
    println!("  c11.field_distances {:?}", report.field_distances);
    println!("  c11.final_f_distances {:?}", report.final_f_distances);
    v.at_most("norms_over_constant", worst / report.constant, 2.0);
    v.at_least("distances_reported", report.field_distances.len() as f64, 3.0);
    v.push(CheckLine {
        name: "distances_non_increasing".into(),
        value: f64::from(u8::from(report.distances_non_increasing)),
        threshold: 1.0,
        pass: report.distances_non_increasing,
    });
    v.finish();
}

#[test]
fn criterion_12_determinism() {
    let mut v = Verdict::new(12, "determinism");
    let dir = tempfile::tempdir().unwrap();
    for preset in PRESETS {
        let csv = |name: &str, threads: usize| -> Vec<u8> {
            let out = dir.path().join(format!("{}-{name}", preset.name()));
            let config = RunConfig {
                t_final: 2.0,
                output_dir: Some(out.clone()),
                ..canonical(preset)
            };
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run_with(&config, false)).unwrap();
            std::fs::read(out.join("diagnostics.csv")).unwrap()
        };
        let a = csv("a", 4);
        let b = csv("b", 4);
        let c = csv("c", 1);
        v.at_most(&format!("differing_runs.{}", preset.name()), f64::from(u8::from(a != b)), 0.0);
        v.at_most(&format!("differing_thread_counts.{}", preset.name()), f64::from(u8::from(a != c)), 0.0);
    }
    v.finish();
}
