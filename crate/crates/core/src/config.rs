//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::harness::{PredictorSpec, SubsetSearchConfig};
use crate::metrics::{Metric, DEFAULT_BOOTSTRAP_B, DEFAULT_CONFIDENCE, MIN_BOOTSTRAP_B};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSection {
    #[serde(default = "default_b")]
    pub b: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_b() -> usize {
    DEFAULT_BOOTSTRAP_B
}

fn default_level() -> f64 {
    DEFAULT_CONFIDENCE
}

impl Default for BootstrapSection {
    fn default() -> Self {
        BootstrapSection { b: DEFAULT_BOOTSTRAP_B, level: DEFAULT_CONFIDENCE }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub csv: PathBuf,
    pub schema: PathBuf,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct NamedPredictor {
    pub label: String,
    #[serde(flatten)]
    pub spec: PredictorSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetSection {
    #[serde(flatten)]
    pub search: SubsetSearchConfig,
    /// Label of the analogy predictor whose settings seed the search.
    #[serde(default)]
    pub predictor: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    pub sizes: Vec<usize>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

fn default_repeats() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    #[serde(default)]
    pub epsilon: f64,
    /// CSV files of published comparison records to vote-count.
    #[serde(default)]
    pub records: Vec<PathBuf>,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection { epsilon: 0.0, records: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeSection {
    #[serde(default = "default_address")]
    pub address: String,
    #[serde(default)]
    pub cors_origin: Option<String>,
}

fn default_address() -> String {
    "127.0.0.1:8080".to_string()
}

impl Default for ServeSection {
    fn default() -> Self {
        ServeSection { address: default_address(), cors_origin: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed: u64,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub bootstrap: BootstrapSection,
    #[serde(default)]
    pub datasets: Vec<DatasetEntry>,
    #[serde(default)]
    pub predictors: Vec<NamedPredictor>,
    #[serde(default)]
    pub subset_search: Option<SubsetSection>,
    #[serde(default)]
    pub sensitivity: Option<SensitivitySection>,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub serve: ServeSection,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::Mmre, Metric::Mdmre, Metric::Pred(25.0), Metric::Mar, Metric::Sa]
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, base)
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn predictor(&self, label: &str) -> Option<&NamedPredictor> {
        self.predictors.iter().find(|p| p.label == label)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported version {}, expected {CONFIG_VERSION}", self.version));
        }
        if self.metrics.is_empty() {
            return bad("metrics must not be empty".into());
        }
        if self.bootstrap.b < MIN_BOOTSTRAP_B {
            return bad(format!("bootstrap.b must be at least {MIN_BOOTSTRAP_B}"));
        }
        if !(self.bootstrap.level > 0.0 && self.bootstrap.level < 1.0) {
            return bad("bootstrap.level must lie in (0, 1)".into());
        }
        if !(self.compare.epsilon >= 0.0 && self.compare.epsilon.is_finite()) {
            return bad("compare.epsilon must be finite and non-negative".into());
        }
        for (i, p) in self.predictors.iter().enumerate() {
            if self.predictors[..i].iter().any(|q| q.label == p.label) {
                return bad(format!("duplicate predictor label '{}'", p.label));
            }
        }
        if let Some(s) = &self.subset_search {
            if !self.metrics.contains(&s.search.objective) {
                return bad(format!("subset_search.objective '{}' is not among the computed metrics", s.search.objective));
            }
            if let Some(label) = &s.predictor {
                match self.predictor(label) {
                    Some(NamedPredictor { spec: PredictorSpec::Analogy(_), .. }) => {}
                    Some(_) => return bad(format!("subset_search.predictor '{label}' is not an analogy predictor")),
                    None => return bad(format!("subset_search.predictor '{label}' is not defined")),
                }
            }
        }
        Ok(())
    }
}
