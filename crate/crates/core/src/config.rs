//! Flat `key = value` experiment configuration files.
//!
//! One assignment per line, `#` starts a comment, keys are the
//! [`ExperimentConfig`] field names. Files double as diff-able records
//! of what ran, so parsing is strict: duplicate keys, unknown keys and
//! malformed values are errors rather than warnings. Values use the
//! same lexical forms the CLI flags accept (`attacks` is a comma list,
//! `pop_sites` is an integer or `none`), and [`render_experiment`]
//! writes a file that parses back to the identical configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::defector::AttackKind;
use crate::evaluation::ExperimentConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("duplicate key `{0}`")]
    Duplicate(String),
    #[error("unknown key `{0}`")]
    Unknown(String),
    #[error("bad value for `{key}`: expected {expected}, got `{got}`")]
    BadValue { key: String, expected: &'static str, got: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A parsed configuration file: raw key/value strings, typed on
/// application.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw.split_once('#') {
                Some((before, _)) => before,
                None => raw,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Parse {
                line,
                reason: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Parse { line, reason: "empty key".into() });
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ConfigError::Duplicate(key.to_string()));
            }
        }
        Ok(Self { values })
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Applies every assignment to `cfg`. Unknown keys are errors, so
    /// a typo cannot silently run the defaults.
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), ConfigError> {
        for (key, value) in &self.values {
            apply_one(cfg, key, value)?;
        }
        Ok(())
    }

    /// Parses, applies to the defaults, and returns the result.
    pub fn to_experiment(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        self.apply(&mut cfg)?;
        Ok(cfg)
    }
}

fn bad(key: &str, expected: &'static str, got: &str) -> ConfigError {
    ConfigError::BadValue { key: key.into(), expected, got: got.into() }
}

/// Parses a comma-separated attack list (`wf,ctw,hp`), the lexical
/// form shared by the `attacks` key and the CLI flag.
pub fn parse_attack_list(value: &str) -> Result<Vec<AttackKind>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| AttackKind::parse(s).ok_or_else(|| bad("attacks", "wf, ctw or hp", s)))
        .collect()
}

fn apply_one(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), ConfigError> {
    macro_rules! num {
        ($expected:literal) => {
            value.parse().map_err(|_| bad(key, $expected, value))?
        };
    }
    match key {
        "monitored_count" => cfg.monitored_count = num!("an integer"),
        "instances_per_site" => cfg.instances_per_site = num!("an integer"),
        "unmonitored_count" => cfg.unmonitored_count = num!("an integer"),
        "folds" => cfg.folds = num!("an integer"),
        "start_rank" => cfg.start_rank = num!("an integer"),
        "attacks" => cfg.attacks = parse_attack_list(value)?,
        "pct" => cfg.pct = num!("a fraction"),
        "window_s" => cfg.window_s = num!("seconds"),
        "scale" => cfg.scale = num!("a scale factor"),
        "visits_per_10min" => cfg.visits_per_10min = num!("a visit count"),
        "n_exits" => cfg.n_exits = num!("an integer"),
        "pop_label" => cfg.pop_label = value.to_string(),
        "pop_sites" => {
            cfg.pop_sites = match value {
                "none" => None,
                _ => Some(value.parse().map_err(|_| bad(key, "an integer or `none`", value))?),
            }
        }
        "rounds" => cfg.rounds = num!("a round count"),
        "separability" => cfg.separability = num!("a fraction"),
        "master_seed" => cfg.master_seed = num!("an integer"),
        "desk_scale" => cfg.desk_scale = num!("an integer"),
        _ => return Err(ConfigError::Unknown(key.to_string())),
    }
    Ok(())
}

/// The configuration as `(key, value)` pairs in field order — the
/// canonical form used by [`render_experiment`] and the run manifest.
pub fn experiment_pairs(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let attacks: Vec<&str> = cfg.attacks.iter().map(|k| k.name()).collect();
    let pop_sites = match cfg.pop_sites {
        Some(n) => n.to_string(),
        None => "none".into(),
    };
    [
        ("monitored_count", cfg.monitored_count.to_string()),
        ("instances_per_site", cfg.instances_per_site.to_string()),
        ("unmonitored_count", cfg.unmonitored_count.to_string()),
        ("folds", cfg.folds.to_string()),
        ("start_rank", cfg.start_rank.to_string()),
        ("attacks", attacks.join(",")),
        ("pct", cfg.pct.to_string()),
        ("window_s", cfg.window_s.to_string()),
        ("scale", cfg.scale.to_string()),
        ("visits_per_10min", cfg.visits_per_10min.to_string()),
        ("n_exits", cfg.n_exits.to_string()),
        ("pop_label", cfg.pop_label.clone()),
        ("pop_sites", pop_sites),
        ("rounds", cfg.rounds.to_string()),
        ("separability", cfg.separability.to_string()),
        ("master_seed", cfg.master_seed.to_string()),
        ("desk_scale", cfg.desk_scale.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Renders a configuration as flat text that parses back to the
/// identical value (floats use Rust's shortest-roundtrip form).
pub fn render_experiment(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    for (k, v) in experiment_pairs(cfg) {
        // Keys and generated values never contain '=', '#' or newlines.
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}
