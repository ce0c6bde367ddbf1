//! Flat `key=value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every other line must
//! be `key=value` with a known key. Hyperparameter keys are stored as
//! overrides and applied on top of the frozen per-model defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mp2_core::data::{RatingsFormat, DEFAULT_NEGATIVES, DEFAULT_PAIRS_PER_USER, DEFAULT_THRESHOLD};
use mp2_core::eval::DEFAULT_KS;
use mp2_core::models::{Hyperparams, ModelKind};

use crate::error::CliError;
use crate::reference::Constants;

/// Directory searched for relative dataset paths that do not exist as given.
pub const DATA_DIR_ENV: &str = "MP2_DATA_DIR";

pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub format: RatingsFormat,
    /// Label used to look up reference metrics; inferred from the path when
    /// unset.
    pub name: Option<String>,
    pub model: ModelKind,
    pub out: PathBuf,
    pub negatives_per_user: usize,
    pub ks: Vec<usize>,
    /// Fixes the split's negative pools independently of training seeds.
    pub eval_seed: u64,
    pub threshold: f64,
    /// Training seeds averaged over by `grid` and `reproduce`.
    pub seeds: Vec<u64>,
    overrides: BTreeMap<String, String>,
}

/// Everything one training run needs beyond the data.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSettings {
    pub hyper: Hyperparams,
    pub pairs_per_user: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("ml-100k/u.data"),
            format: RatingsFormat::Ml100kTab,
            name: None,
            model: ModelKind::Mp2,
            out: PathBuf::from("runs"),
            negatives_per_user: DEFAULT_NEGATIVES,
            ks: DEFAULT_KS.to_vec(),
            eval_seed: 0,
            threshold: DEFAULT_THRESHOLD,
            seeds: DEFAULT_SEEDS.to_vec(),
            overrides: BTreeMap::new(),
        }
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    let items = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::Config(format!("bad entry `{s}` in `{key}`"))))
        .collect::<Result<Vec<T>, _>>()?;
    if items.is_empty() {
        return Err(CliError::Config(format!("`{key}` must not be empty")));
    }
    Ok(items)
}

fn parse_one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("bad value `{value}` for `{key}`")))
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key=value", n + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| CliError::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(path, mp2_core::Error::Io(e)))?;
        Self::parse(&text)
    }

    /// Sets one key. Hyperparameter keys are checked against the schema
    /// immediately and kept as overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "dataset" => self.dataset = PathBuf::from(value),
            "format" => self.format = value.parse()?,
            "name" => self.name = Some(value.to_string()),
            "model" => self.model = value.parse()?,
            "out" => self.out = PathBuf::from(value),
            "negatives_per_user" => self.negatives_per_user = parse_one(key, value)?,
            "ks" => self.ks = parse_list(key, value)?,
            "eval_seed" => self.eval_seed = parse_one(key, value)?,
            "threshold" => self.threshold = parse_one(key, value)?,
            "seeds" => self.seeds = parse_list(key, value)?,
            "pairs_per_user" => {
                parse_one::<usize>(key, value)?;
                self.overrides.insert(key.into(), value.into());
            }
            _ => {
                if !Hyperparams::default().set(key, value)? {
                    return Err(CliError::Config(format!("unknown key `{key}`")));
                }
                self.overrides.insert(canonical_key(key).into(), value.into());
            }
        }
        Ok(())
    }

    pub fn overrides(&self) -> &BTreeMap<String, String> {
        &self.overrides
    }

    /// Frozen defaults for `kind`, then this config's overrides, validated.
    pub fn settings_for(&self, kind: ModelKind) -> Result<TrainSettings, CliError> {
        let mut hyper = Hyperparams::default();
        let mut pairs_per_user = DEFAULT_PAIRS_PER_USER;
        let defaults = Constants::bundled().defaults(kind);
        for (k, v) in defaults.iter().map(|(k, v)| (k, v)).chain(&self.overrides) {
            if k == "pairs_per_user" {
                pairs_per_user = parse_one(k, v)?;
            } else if !hyper.set(k, v)? {
                return Err(CliError::Config(format!("unknown key `{k}`")));
            }
        }
        if pairs_per_user == 0 {
            return Err(CliError::Config("pairs_per_user must be >= 1".into()));
        }
        hyper.validate()?;
        Ok(TrainSettings {
            hyper,
            pairs_per_user,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.negatives_per_user == 0 {
            return Err(CliError::Config("negatives_per_user must be >= 1".into()));
        }
        if self.ks.contains(&0) {
            return Err(CliError::Config("cutoffs in `ks` must be >= 1".into()));
        }
        if !self.threshold.is_finite() {
            return Err(CliError::Config("threshold must be finite".into()));
        }
        self.settings_for(self.model)?;
        Ok(())
    }

    /// The configured dataset path, falling back to the data directory
    /// environment variable for relative paths that do not exist.
    pub fn resolve_dataset(&self) -> PathBuf {
        if self.dataset.is_absolute() || self.dataset.exists() {
            return self.dataset.clone();
        }
        match std::env::var_os(DATA_DIR_ENV) {
            Some(root) => Path::new(&root).join(&self.dataset),
            None => self.dataset.clone(),
        }
    }

    /// Explicit `name`, else the dataset's parent directory name
    /// (`ml-100k/u.data` gives `ml-100k`), else the file stem.
    pub fn dataset_name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        let parent = self
            .dataset
            .parent()
            .and_then(Path::file_name)
            .map(|s| s.to_string_lossy().into_owned());
        parent
            .or_else(|| self.dataset.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .unwrap_or_default()
    }

    fn data_lines(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dataset={}", self.dataset.display());
        let _ = writeln!(s, "format={}", self.format);
        if let Some(n) = &self.name {
            let _ = writeln!(s, "name={n}");
        }
        let _ = writeln!(s, "model={}", self.model);
        let _ = writeln!(s, "out={}", self.out.display());
        let _ = writeln!(s, "negatives_per_user={}", self.negatives_per_user);
        let _ = writeln!(s, "ks={}", join(&self.ks));
        let _ = writeln!(s, "eval_seed={}", self.eval_seed);
        let _ = writeln!(s, "threshold={}", self.threshold);
        let _ = writeln!(s, "seeds={}", join(&self.seeds));
        s
    }

    /// Serialized form that parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = self.data_lines();
        for (k, v) in &self.overrides {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    /// Serialized form with every training setting spelled out, so the file
    /// no longer depends on the bundled defaults.
    pub fn resolved_text(&self, kind: ModelKind) -> Result<String, CliError> {
        let settings = self.settings_for(kind)?;
        let mut s = self.data_lines();
        let _ = writeln!(s, "pairs_per_user={}", settings.pairs_per_user);
        for (k, v) in settings.hyper.to_pairs() {
            let _ = writeln!(s, "{k}={v}");
        }
        Ok(s)
    }
}

fn canonical_key(key: &str) -> &str {
    match key {
        "lr" => "learning_rate",
        "dim" => "embedding_dim",
        other => other,
    }
}
