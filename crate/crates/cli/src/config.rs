//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, sections are spelled as
//! dotted keys (`grid.lengths`). Every key has a default; unknown keys,
//! repeated keys and malformed values are errors naming the key. The echo
//! written by [`Settings::to_cfg`] lists every key and parses back to the
//! same settings.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rvm::diagnostics::RecordTolerances;
use rvm::regularized::RunConfig;
use rvm::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` is set twice")]
    Duplicate(String),
    #[error("key `{key}`: expected {expected}, found `{value}`")]
    Type {
        key: String,
        expected: &'static str,
        value: String,
    },
    #[error("key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

impl ConfigError {
    /// The offending key, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey(k) | ConfigError::Duplicate(k) => Some(k),
            ConfigError::Type { key, .. } | ConfigError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

/// Resolution and ensemble of `verify-averaging`.
#[derive(Clone, Debug, PartialEq)]
pub struct AveragingSettings {
    /// Radius of the momentum weight `ψ`.
    pub psi_radius: f64,
    /// Number of random manufactured triples per level.
    pub triples: usize,
    pub nt: usize,
    pub nx: usize,
    pub np: usize,
    /// Refinement levels `0..levels`.
    pub levels: usize,
}

impl Default for AveragingSettings {
    fn default() -> Self {
        Self {
            psi_radius: 2.0,
            triples: 20,
            nt: 16,
            nx: 16,
            np: 16,
            levels: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub run: RunConfig,
    pub averaging: AveragingSettings,
    pub checks: RecordTolerances,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            run: RunConfig::default(),
            averaging: AveragingSettings::default(),
            checks: RecordTolerances::default(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "seed",
    "n",
    "n_list",
    "dt",
    "t_final",
    "save_every",
    "snapshots",
    "grid.spatial_cells",
    "grid.lengths",
    "grid.momentum_cells",
    "grid.momentum_halfwidth",
    "preset",
    "preset.density",
    "preset.alpha",
    "preset.mode",
    "preset.beta",
    "preset.drift",
    "preset.b_amplitude",
    "preset.bump_radius",
    "check.charge",
    "check.domination",
    "check.div_b",
    "averaging.psi_radius",
    "averaging.triples",
    "averaging.nt",
    "averaging.nx",
    "averaging.np",
    "averaging.levels",
];

fn scalar<T: FromStr>(key: &str, value: &str, expected: &'static str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Type {
        key: key.to_string(),
        expected,
        value: value.to_string(),
    })
}

fn list<T: FromStr>(key: &str, value: &str, expected: &'static str) -> Result<Vec<T>, ConfigError> {
    value.split(',').map(|v| scalar(key, v.trim(), expected)).collect()
}

fn triple<T: FromStr + Copy>(key: &str, value: &str, expected: &'static str) -> Result<[T; 3], ConfigError> {
    let v: Vec<T> = list(key, value, expected)?;
    <[T; 3]>::try_from(v).map_err(|_| ConfigError::Type {
        key: key.to_string(),
        expected,
        value: value.to_string(),
    })
}

fn join<T: std::fmt::Debug>(v: &[T]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

impl Settings {
    /// Assigns one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let r = &mut self.run;
        let a = &mut self.averaging;
        let c = &mut self.checks;
        const NUM: &str = "a number";
        const INT: &str = "a non-negative integer";
        match key {
            "seed" => r.seed = scalar(key, value, INT)?,
            "n" => r.n = scalar(key, value, "an integer")?,
            "n_list" => r.n_list = list(key, value, "a comma-separated list of integers")?,
            "dt" => r.dt = scalar(key, value, NUM)?,
            "t_final" => r.t_final = scalar(key, value, NUM)?,
            "save_every" => r.save_every = scalar(key, value, INT)?,
            "snapshots" => r.write_snapshots = scalar(key, value, "true or false")?,
            "grid.spatial_cells" => r.spatial_cells = triple(key, value, "three cell counts")?,
            "grid.lengths" => r.lengths = triple(key, value, "three lengths")?,
            "grid.momentum_cells" => r.momentum_cells = triple(key, value, "three cell counts")?,
            "grid.momentum_halfwidth" => r.momentum_halfwidth = scalar(key, value, NUM)?,
            "preset" => {
                r.preset = value.parse().map_err(|_| ConfigError::Type {
                    key: key.to_string(),
                    expected: "a preset name (see `rvm presets`)",
                    value: value.to_string(),
                })?
            }
            "preset.density" => r.density = scalar(key, value, NUM)?,
            "preset.alpha" => r.alpha = scalar(key, value, NUM)?,
            "preset.mode" => r.mode = scalar(key, value, INT)?,
            "preset.beta" => r.beta = scalar(key, value, NUM)?,
            "preset.drift" => r.drift = scalar(key, value, NUM)?,
            "preset.b_amplitude" => r.b_amplitude = scalar(key, value, NUM)?,
            "preset.bump_radius" => r.bump_radius = scalar(key, value, NUM)?,
            "check.charge" => c.charge = scalar(key, value, NUM)?,
            "check.domination" => c.domination = scalar(key, value, NUM)?,
            "check.div_b" => c.div_b = scalar(key, value, NUM)?,
            "averaging.psi_radius" => a.psi_radius = scalar(key, value, NUM)?,
            "averaging.triples" => a.triples = scalar(key, value, INT)?,
            "averaging.nt" => a.nt = scalar(key, value, INT)?,
            "averaging.nx" => a.nx = scalar(key, value, INT)?,
            "averaging.np" => a.np = scalar(key, value, INT)?,
            "averaging.levels" => a.levels = scalar(key, value, INT)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, reason: &str| ConfigError::Invalid {
            key: key.to_string(),
            reason: reason.to_string(),
        };
        let r = &self.run;
        for (key, cells) in [("grid.spatial_cells", r.spatial_cells), ("grid.momentum_cells", r.momentum_cells)] {
            if cells.contains(&0) {
                return Err(invalid(key, "cell counts must be positive"));
            }
        }
        if r.mode == 0 {
            return Err(invalid("preset.mode", "must be positive"));
        }
        r.validate().map_err(|e| match e {
            CoreError::InvalidParameter { name, reason } => ConfigError::Invalid {
                key: name.to_string(),
                reason,
            },
            other => invalid("grid", &other.to_string()),
        })?;
        let c = &self.checks;
        for (key, v) in [("check.charge", c.charge), ("check.domination", c.domination), ("check.div_b", c.div_b)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(key, "tolerances must be non-negative"));
            }
        }
        let a = &self.averaging;
        if !(a.psi_radius.is_finite() && a.psi_radius > 0.0) {
            return Err(invalid("averaging.psi_radius", "must be positive"));
        }
        for (key, v) in [("averaging.nt", a.nt), ("averaging.nx", a.nx), ("averaging.np", a.np)] {
            if v < 8 || v % 2 != 0 {
                return Err(invalid(key, "must be an even count of at least 8"));
            }
        }
        if a.levels == 0 {
            return Err(invalid("averaging.levels", "must be at least 1"));
        }
        Ok(())
    }

    /// Every key in [`KEYS`] order, one per line.
    pub fn to_cfg(&self) -> String {
        let r = &self.run;
        let a = &self.averaging;
        let c = &self.checks;
        let values: Vec<String> = vec![
            r.seed.to_string(),
            r.n.to_string(),
            join(&r.n_list),
            format!("{:?}", r.dt),
            format!("{:?}", r.t_final),
            r.save_every.to_string(),
            r.write_snapshots.to_string(),
            join(&r.spatial_cells),
            join(&r.lengths),
            join(&r.momentum_cells),
            format!("{:?}", r.momentum_halfwidth),
            r.preset.name().to_string(),
            format!("{:?}", r.density),
            format!("{:?}", r.alpha),
            r.mode.to_string(),
            format!("{:?}", r.beta),
            format!("{:?}", r.drift),
            format!("{:?}", r.b_amplitude),
            format!("{:?}", r.bump_radius),
            format!("{:?}", c.charge),
            format!("{:?}", c.domination),
            format!("{:?}", c.div_b),
            format!("{:?}", a.psi_radius),
            a.triples.to_string(),
            a.nt.to_string(),
            a.nx.to_string(),
            a.np.to_string(),
            a.levels.to_string(),
        ];
        debug_assert_eq!(values.len(), KEYS.len());
        let mut out = String::from("# resolved configuration\n");
        for (k, v) in KEYS.iter().zip(values) {
            writeln!(out, "{k} = {v}").expect("writing to a string");
        }
        out
    }
}

/// Applies the assignments of a configuration text on top of `base`.
pub fn apply_str(base: Settings, text: &str) -> Result<Settings, ConfigError> {
    let mut settings = base;
    let mut seen = std::collections::HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.trim().to_string(),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.trim().to_string(),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::Duplicate(key.to_string()));
        }
        settings.set(key, value.trim())?;
    }
    Ok(settings)
}

/// Parses a configuration text over the defaults and validates it.
pub fn parse_str(text: &str) -> Result<Settings, ConfigError> {
    let settings = apply_str(Settings::default(), text)?;
    settings.validate()?;
    Ok(settings)
}

/// Splits a `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String), ConfigError> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(ConfigError::Syntax {
            line: 0,
            text: s.to_string(),
        }),
    }
}

/// Reads `path` (if any) over the defaults, then applies the overrides in
/// order and validates the result.
pub fn parse_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Settings, ConfigError> {
    let mut settings = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                path: p.display().to_string(),
                source,
            })?;
            apply_str(Settings::default(), &text)?
        }
        None => Settings::default(),
    };
    for (k, v) in overrides {
        settings.set(k, v)?;
    }
    settings.validate()?;
    Ok(settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rvm::regularized::PresetKind;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(parse_str("").unwrap(), Settings::default());
        assert_eq!(parse_str("# nothing\n\n   \n").unwrap(), Settings::default());
    }

    #[test]
    fn echo_lists_every_key_and_round_trips() {
        let s = Settings::default();
        let text = s.to_cfg();
        for k in KEYS {
            assert!(text.contains(&format!("\n{k} = ")), "{k}");
        }
        assert_eq!(parse_str(&text).unwrap(), s);
    }

    #[test]
    fn assignments_and_comments() {
        let s = parse_str("dt = 0.025  # finer\npreset = two-stream\ngrid.spatial_cells = 32, 1, 1\nn_list = 1,2\n").unwrap();
        assert_eq!(s.run.dt, 0.025);
        assert_eq!(s.run.preset, PresetKind::TwoStream);
        assert_eq!(s.run.spatial_cells, [32, 1, 1]);
        assert_eq!(s.run.n_list, vec![1, 2]);
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            ("dt = 0", "dt"),
            ("dt = fast", "dt"),
            ("grid.dx = 1", "grid.dx"),
            ("grid.spatial_cells = 4, 4", "grid.spatial_cells"),
            ("grid.momentum_cells = 0, 4, 1", "grid.momentum_cells"),
            ("preset = nope", "preset"),
            ("n_list = 4, 2", "n_list"),
            ("preset.alpha = 2", "preset.alpha"),
            ("t_final = 0.07", "t_final"),
            ("averaging.nt = 7", "averaging.nt"),
            ("check.charge = -1", "check.charge"),
            ("seed = -3", "seed"),
            ("dt = 0.1\ndt = 0.2", "dt"),
        ];
        for (text, key) in cases {
            let err = parse_str(text).unwrap_err();
            assert_eq!(err.key(), Some(key), "{text}: {err}");
            assert!(err.to_string().contains(key));
        }
    }

    #[test]
    fn syntax_errors_report_the_line() {
        let err = parse_str("dt = 0.1\njust words\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn overrides_apply_after_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.cfg");
        std::fs::write(&path, "dt = 0.1\nt_final = 1\n").unwrap();
        let s = parse_config(Some(&path), &[parse_override("dt=0.05").unwrap()]).unwrap();
        assert_eq!(s.run.dt, 0.05);
        assert_eq!(s.run.t_final, 1.0);
        let again = parse_config(Some(&path), &[parse_override("dt=0.05").unwrap()]).unwrap();
        assert_eq!(s, again);
        assert!(parse_override("novalue").is_err());
    }
}
