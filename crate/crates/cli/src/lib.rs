//! Command-line driver: configuration, scenario execution and summaries.
//!
//! Every command that runs the solver writes `resolved.cfg` and a
//! `summary.txt` of PASS/FAIL lines into the output directory. The process
//! exits 0 iff every line passes.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rvm::averaging::{
    free_streaming_triple, make_triple_from_run, random_triple, verify_triple, write_report_csv, LabelledTriple,
    LemmaReport, TripleGeometry, TripleResolution,
};
use rvm::diagnostics::{read_csv, record_checks, write_csv, write_summary, CheckLine, DiagnosticRecord};
use rvm::regularized::{run_sequence, run_with, PresetKind, RunConfig};
use rvm::Error as CoreError;

pub use config::{parse_config, parse_override, parse_str, AveragingSettings, ConfigError, Settings};

#[derive(Debug, Parser)]
#[command(name = "rvm", version, about = "Regularized relativistic Vlasov-Maxwell solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file (flat `key = value`).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one key; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", value_parser = parse_override)]
    pub overrides: Vec<(String, String)>,
    /// Output directory (the directory to inspect for `check`).
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Shorthand for `--set seed=N`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Evolve one configuration and check its diagnostics.
    Run,
    /// Run the mollifier scales of `n_list` and compare them.
    Sequence,
    /// Check the momentum-averaging estimate on manufactured and simulated triples.
    VerifyAveraging,
    /// Re-check `diagnostics.csv` in the output directory (uses its `resolved.cfg` unless `--config` is given).
    Check,
    /// List the initial-data presets.
    Presets,
}

impl Cli {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut o = self.overrides.clone();
        if let Some(s) = self.seed {
            o.push(("seed".into(), s.to_string()));
        }
        o
    }

    pub fn settings(&self) -> Result<Settings, ConfigError> {
        let fallback = self.out.join("resolved.cfg");
        let path = match (&self.config, self.command) {
            (Some(p), _) => Some(p.clone()),
            (None, Command::Check) if fallback.is_file() => Some(fallback),
            _ => None,
        };
        parse_config(path.as_deref(), &self.overrides())
    }
}

/// The PASS/FAIL lines of one command.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub lines: Vec<CheckLine>,
    /// Free-form report printed before the lines.
    pub report: String,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.lines.iter().filter(|l| !l.pass).map(|l| l.name.as_str()).collect()
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    if cli.command == Command::Presets {
        return Ok(cmd_presets());
    }
    let settings = cli.settings()?;
    match cli.command {
        Command::Run => cmd_run(&settings, &cli.out),
        Command::Sequence => cmd_sequence(&settings, &cli.out),
        Command::VerifyAveraging => cmd_verify_averaging(&settings, &cli.out),
        Command::Check => cmd_check(&settings, &cli.out),
        Command::Presets => unreachable!(),
    }
}

/// Runs the command line and returns the process exit code: 0 when every
/// check passes, 1 when one fails, 2 on errors.
pub fn main_with(args: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            for l in &outcome.lines {
                println!("{l}");
            }
            if outcome.passed() {
                0
            } else {
                eprintln!("FAIL: {}", outcome.failing().join(", "));
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn prepare(settings: &Settings, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    std::fs::write(out.join("resolved.cfg"), settings.to_cfg())?;
    Ok(())
}

fn finish(out: &Path, lines: Vec<CheckLine>, report: String) -> Result<Outcome> {
    write_summary(&out.join("summary.txt"), &lines)?;
    Ok(Outcome { lines, report })
}

/// Record checks plus the fraction of the scheduled steps present.
fn history_checks(settings: &Settings, records: &[DiagnosticRecord]) -> Vec<CheckLine> {
    let (total, _) = settings.run.schedule();
    let last = records.last().map_or(0, |r| r.step);
    let done = if total == 0 { 1.0 } else { last as f64 / total as f64 };
    let mut lines = vec![CheckLine::at_least("completed", done, 1.0)];
    lines.extend(record_checks(records, settings.checks));
    lines
}

pub fn cmd_run(settings: &Settings, out: &Path) -> Result<Outcome> {
    prepare(settings, out)?;
    let cfg = RunConfig {
        output_dir: Some(out.to_path_buf()),
        ..settings.run.clone()
    };
    log::info!("run: preset {} n = {} to t = {}", cfg.preset, cfg.n, cfg.t_final);
    let (records, report) = match run_with(&cfg, false) {
        Ok(o) => (o.records, String::new()),
        Err(e @ CoreError::MomentumSupportBreach { .. }) => {
            let records = read_csv(&out.join("diagnostics.csv"))?;
            (records, format!("aborted: {e}\n"))
        }
        Err(e) => return Err(e.into()),
    };
    finish(out, history_checks(settings, &records), report)
}

pub fn cmd_check(settings: &Settings, out: &Path) -> Result<Outcome> {
    let path = out.join("diagnostics.csv");
    let records = read_csv(&path).with_context(|| format!("reading {}", path.display()))?;
    if records.is_empty() {
        bail!("{} has no rows", path.display());
    }
    finish(out, history_checks(settings, &records), String::new())
}

pub fn cmd_sequence(settings: &Settings, out: &Path) -> Result<Outcome> {
    prepare(settings, out)?;
    let cfg = &settings.run;
    log::info!("sequence: n in {:?}", cfg.n_list);
    let seq = run_sequence(cfg, &cfg.n_list)?;
    let mut lines = Vec::new();
    let mut table = String::from("n,kin_norm,linf,e_l2,b_l2,rho43,j43,field_distance,f_distance\n");
    for (k, m) in seq.members.iter().enumerate() {
        write_csv(&out.join(format!("diagnostics_n{}.csv", m.n)), &m.records)?;
        for l in record_checks(&m.records, settings.checks) {
            lines.push(CheckLine {
                name: format!("n{}.{}", m.n, l.name),
                ..l
            });
        }
        let peak = |f: fn(&rvm::regularized::UniformQuantities) -> f64| m.samples.iter().map(f).fold(0.0, f64::max);
        let _ = write!(
            table,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            m.n,
            peak(|s| s.kin_norm),
            peak(|s| s.linf),
            peak(|s| s.e_l2),
            peak(|s| s.b_l2),
            peak(|s| s.rho43),
            peak(|s| s.j43)
        );
        match k {
            0 => table.push_str(",,\n"),
            _ => {
                let _ = writeln!(table, ",{:.17e},{:.17e}", seq.field_distances[k - 1], seq.final_f_distances[k - 1]);
            }
        }
    }
    std::fs::write(out.join("sequence.csv"), table)?;
    let worst = seq
        .members
        .iter()
        .flat_map(|m| &m.samples)
        .map(|s| s.max() / seq.constant)
        .fold(0.0, f64::max);
    lines.push(CheckLine::at_most("uniform_bounds", worst, 2.0));
    lines.push(CheckLine::at_least(
        "field_distances_non_increasing",
        if seq.distances_non_increasing { 1.0 } else { 0.0 },
        1.0,
    ));
    let report = format!("constant = {:e}\nuniform = {}\n", seq.constant, seq.uniform);
    finish(out, lines, report)
}

/// The simulated triple of one level: the configured preset on the averaging
/// resolution, `2 nt` frames one step apart.
fn run_triple(settings: &Settings, res: TripleResolution, level: usize) -> Result<LabelledTriple> {
    let dt = settings.run.dt / (1usize << level) as f64;
    let frames = 2 * res.nt;
    let cfg = RunConfig {
        spatial_cells: [res.nx, 1, 1],
        momentum_cells: [2 * res.np, 2 * res.np, 1],
        dt,
        t_final: dt * (frames - 1) as f64,
        save_every: 1,
        output_dir: None,
        write_snapshots: false,
        ..settings.run.clone()
    };
    let out = run_with(&cfg, true)?;
    Ok(LabelledTriple {
        id: format!("run-{}", cfg.preset),
        level,
        triple: make_triple_from_run(&out.frames)?,
    })
}

pub fn cmd_verify_averaging(settings: &Settings, out: &Path) -> Result<Outcome> {
    prepare(settings, out)?;
    let a = &settings.averaging;
    let geo = TripleGeometry::default();
    let base = TripleResolution {
        nt: a.nt,
        nx: a.nx,
        np: a.np,
    };
    let mut rows = Vec::new();
    for level in 0..a.levels {
        let res = base.refined(level);
        log::info!("verify-averaging: level {level}, {res:?}");
        let mut builders: Vec<Box<dyn Fn() -> Result<LabelledTriple>>> = Vec::new();
        for k in 0..a.triples as u64 {
            let seed = settings.run.seed.wrapping_add(k);
            builders.push(Box::new(move || {
                Ok(LabelledTriple {
                    id: format!("random-{k}"),
                    level,
                    triple: random_triple(seed, &geo, res)?,
                })
            }));
        }
        for mode in [1, 2] {
            builders.push(Box::new(move || {
                Ok(LabelledTriple {
                    id: format!("free-streaming-{mode}"),
                    level,
                    triple: free_streaming_triple(&geo, res, mode)?,
                })
            }));
        }
        builders.push(Box::new(move || run_triple(settings, res, level)));
        // built and verified one at a time to bound memory
        for build in builders {
            let t = build()?;
            rows.push(verify_triple(&t, a.psi_radius).with_context(|| format!("triple {}", t.id))?);
        }
    }
    let report = LemmaReport {
        max_ratio: rows.iter().map(|r| r.ratio).fold(0.0, f64::max),
        rows,
    };
    write_report_csv(&out.join("averaging.csv"), &report)?;
    let rows = &report.rows;
    let max = |f: &dyn Fn(&rvm::averaging::TripleVerification) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let lines = vec![
        CheckLine::at_least("triples", rows.len() as f64, (a.levels * (a.triples + 3)) as f64),
        CheckLine::at_most("split_defect", max(&|r| r.split_defect), 1e-12),
        CheckLine::at_most("i1_violations", max(&|r| r.i1_violations as f64), 0.0),
        CheckLine::at_most(
            "majorant",
            max(&|r| if r.majorant > 0.0 { r.h14 / r.majorant } else { 0.0 }),
            1.0,
        ),
        CheckLine::at_most(
            "near_terms",
            rows.iter().filter(|r| !r.near_terms_bounded).count() as f64,
            0.0,
        ),
    ];
    let report = format!("max ratio = {:e}\n", report.max_ratio);
    finish(out, lines, report)
}

pub fn cmd_presets() -> Outcome {
    let mut report = String::new();
    for p in PresetKind::ALL {
        let _ = writeln!(report, "{:<16} {}", p.name(), p.description());
    }
    Outcome {
        lines: Vec::new(),
        report,
    }
}
