use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rvm_cli::{parse_config, parse_str};

fn rvm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rvm"))
        .args(args)
        .output()
        .expect("spawning rvm")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

#[test]
fn presets_lists_every_preset() {
    let o = rvm(&["presets"]);
    assert!(o.status.success());
    let s = text(&o.stdout);
    for name in ["maxwellian-bump", "two-stream", "localized-bump", "zero"] {
        assert!(s.contains(name), "{s}");
    }
}

#[test]
fn zero_run_passes_and_echoes_its_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = rvm(&["run", "--set", "preset=zero", "--set", "t_final=0.5", "--seed", "9", "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,time,charge,linf,l2,kin_norm,mod_energy,phys_energy,rho43,j43,gauss_res,divb_res,clip_tally,support_margin"
    );
    for row in lines {
        let v: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v[2..13], [0.0; 11], "{row}");
    }
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.lines().all(|l| l.ends_with(" PASS")), "{summary}");
    let echo = std::fs::read_to_string(dir.path().join("resolved.cfg")).unwrap();
    let settings = parse_str(&echo).unwrap();
    assert_eq!(settings.run.seed, 9);
    assert_eq!(settings.to_cfg(), echo);
}

#[test]
fn check_names_a_tampered_charge_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = rvm(&["run", "--set", "t_final=0.5", "--set", "grid.spatial_cells=32,1,1", "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert_eq!(rvm(&["check", "--out", &out]).status.code(), Some(0));

    let path = dir.path().join("diagnostics.csv");
    let csv = std::fs::read_to_string(&path).unwrap();
    let mut rows: Vec<String> = csv.lines().map(String::from).collect();
    let mut cells: Vec<String> = rows[3].split(',').map(String::from).collect();
    let charge: f64 = cells[2].parse().unwrap();
    cells[2] = format!("{:?}", charge + 1e-3);
    rows[3] = cells.join(",");
    std::fs::write(&path, rows.join("\n") + "\n").unwrap();

    let o = rvm(&["check", "--out", &out]);
    assert_ne!(o.status.code(), Some(0));
    let err = text(&o.stderr);
    let fail_lines: Vec<&str> = err.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(fail_lines, ["FAIL: charge"], "{err}");
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("charge ") && l.ends_with("FAIL")));
}

#[test]
fn invalid_overrides_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    for (set, key) in [("dt=0", "dt"), ("grid.cells=3", "grid.cells"), ("preset=plasma", "preset")] {
        let o = rvm(&["run", "--set", set, "--out", &out]);
        assert_eq!(o.status.code(), Some(2));
        assert!(text(&o.stderr).contains(&format!("`{key}`")), "{}", text(&o.stderr));
    }
    assert!(!dir.path().join("diagnostics.csv").exists());
}

#[test]
fn support_breach_fails_the_completed_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = rvm(&[
        "run",
        "--set",
        "preset.b_amplitude=0.5",
        "--set",
        "grid.momentum_cells=16,16,1",
        "--set",
        "t_final=1",
        "--out",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("FAIL: completed"));
    assert!(text(&o.stdout).contains("momentum support breach"));
    assert!(dir.path().join("diagnostics.csv").exists());
}

#[test]
fn shipped_configs_parse_and_run() {
    let mut names: Vec<PathBuf> = std::fs::read_dir(configs())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "cfg"))
        .collect();
    names.sort();
    assert!(names.len() >= 6);
    for path in &names {
        let settings = parse_config(Some(path), &[]).unwrap();
        assert_eq!(parse_config(Some(path), &[]).unwrap(), settings);
        let stem = path.file_stem().unwrap().to_str().unwrap();
        if matches!(stem, "sequence" | "averaging") {
            continue;
        }
        let dir = tempfile::tempdir().unwrap();
        let out = out_arg(dir.path());
        let t = (settings.run.dt * 4.0).to_string();
        let o = rvm(&["run", "--config", path.to_str().unwrap(), "--set", &format!("t_final={t}"), "--out", &out]);
        assert_eq!(o.status.code(), Some(0), "{stem}: {}{}", text(&o.stdout), text(&o.stderr));
    }
}

#[test]
fn sequence_reports_the_uniform_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let cfg = configs().join("sequence.cfg");
    let o = rvm(&["sequence", "--config", cfg.to_str().unwrap(), "--set", "t_final=1", "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}{}", text(&o.stdout), text(&o.stderr));
    let stdout = text(&o.stdout);
    assert!(stdout.contains("uniform = true"), "{stdout}");
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("uniform_bounds"));
    for n in [2, 4, 8] {
        assert!(dir.path().join(format!("diagnostics_n{n}.csv")).exists());
    }
    assert_eq!(std::fs::read_to_string(dir.path().join("sequence.csv")).unwrap().lines().count(), 4);
}

#[test]
fn verify_averaging_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let cfg = configs().join("averaging.cfg");
    let o = rvm(&[
        "verify-averaging",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "averaging.levels=1",
        "--set",
        "averaging.triples=3",
        "--out",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}{}", text(&o.stdout), text(&o.stderr));
    let report = std::fs::read_to_string(dir.path().join("averaging.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 3 + 3);
    assert!(report.lines().last().unwrap().starts_with("run-maxwellian-bump,0,"));
}
