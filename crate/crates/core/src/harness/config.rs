//! Experiment configuration (TOML).
//!
//! ```toml
//! horizon = 100000
//! comparator = "condorcet"          # or "best-fixed", "fixed:<arm>" (1-indexed)
//! checkpoints = 100                 # log-spaced from t = 10 to the horizon
//! extra_checkpoints = [10000]
//! seeds = { base = 7, count = 20 }  # or { base = 7, indices = [0, 4, 9] }
//!
//! [environment]
//! kind = "stationary"               # stationary | piecewise | rotating | drift
//! instance = "hard"
//! arms = 10
//! rho = 0.0
//!
//! [[algorithms]]
//! name = "rr-elim"
//! params = { delta = 0.1 }
//! ```
//!
//! A matrix source is one of `instance` + `arms`, `matrix_csv` (relative to
//! the config file), `utilities` (Plackett-Luce) or inline `matrix` rows.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::registry::{find_algorithm, Algorithm};
use super::HarnessError;
use crate::environment::{Environment, EnvironmentKind, Segment, UtilityPath};
use crate::metrics::Comparator;
use crate::preference::{InstanceName, PreferenceMatrix};

fn default_checkpoints() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub horizon: u64,
    pub comparator: Comparator,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    #[serde(default)]
    pub extra_checkpoints: Vec<u64>,
    pub seeds: SeedSpec,
    pub environment: EnvironmentSpec,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Directory relative matrix paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub base: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<u64>>,
}

impl SeedSpec {
    pub fn indices(&self) -> Result<Vec<u64>, HarnessError> {
        let list = match (self.count, &self.indices) {
            (Some(n), None) => (0..n).collect(),
            (None, Some(list)) => list.clone(),
            _ => return Err(HarnessError::Config("seeds need exactly one of `count` or `indices`".into())),
        };
        if list.is_empty() {
            return Err(HarnessError::Config("at least one seed is required".into()));
        }
        let mut sorted = list.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != list.len() {
            return Err(HarnessError::Config("seed indices must be distinct".into()));
        }
        Ok(list)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvironmentKindSpec {
    Stationary,
    Piecewise,
    /// The base matrix with its arm labels cyclically shifted by one every
    /// `period` rounds, so the best arm rotates.
    Rotating,
    Drift,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl MatrixSource {
    fn is_empty(&self) -> bool {
        self.instance.is_none()
            && self.matrix_csv.is_none()
            && self.utilities.is_none()
            && self.matrix.is_none()
    }

    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<PreferenceMatrix, HarnessError> {
        let given = [
            self.instance.is_some(),
            self.matrix_csv.is_some(),
            self.utilities.is_some(),
            self.matrix.is_some(),
        ];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(HarnessError::Config(
                "a matrix source needs exactly one of instance, matrix_csv, utilities, matrix".into(),
            ));
        }
        if self.arms.is_some() && self.instance.is_none() {
            return Err(HarnessError::Config("`arms` only applies to a named instance".into()));
        }
        let matrix = if let Some(name) = self.instance {
            let k = self
                .arms
                .ok_or_else(|| HarnessError::Config(format!("instance {name} needs `arms`")))?;
            name.matrix(k)?
        } else if let Some(path) = &self.matrix_csv {
            let path = match base_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            PreferenceMatrix::load_csv(path)?
        } else if let Some(theta) = &self.utilities {
            PreferenceMatrix::plackett_luce(theta)?
        } else {
            PreferenceMatrix::validate(self.matrix.as_deref().unwrap_or_default())?
        };
        Ok(matrix)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub duration: u64,
    #[serde(flatten)]
    pub source: MatrixSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyframeSpec {
    pub round: u64,
    pub utilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub kind: EnvironmentKindSpec,
    #[serde(default)]
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<SegmentSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub keyframes: Vec<KeyframeSpec>,
    #[serde(flatten)]
    pub source: MatrixSource,
}

impl EnvironmentSpec {
    pub fn build(&self, horizon: u64, base_dir: Option<&Path>) -> Result<Environment, HarnessError> {
        let needs_source = matches!(
            self.kind,
            EnvironmentKindSpec::Stationary | EnvironmentKindSpec::Rotating
        );
        if needs_source == self.source.is_empty() {
            return Err(HarnessError::Config(format!(
                "{:?} environments {} a top-level matrix source",
                self.kind,
                if needs_source { "need" } else { "do not take" }
            )));
        }
        if self.kind != EnvironmentKindSpec::Piecewise && !self.segments.is_empty() {
            return Err(HarnessError::Config("`segments` only applies to piecewise environments".into()));
        }
        if self.kind != EnvironmentKindSpec::Drift && !self.keyframes.is_empty() {
            return Err(HarnessError::Config("`keyframes` only applies to drift environments".into()));
        }
        if (self.kind == EnvironmentKindSpec::Rotating) != self.period.is_some() {
            return Err(HarnessError::Config("`period` is required for, and only for, rotating environments".into()));
        }
        let kind = match self.kind {
            EnvironmentKindSpec::Stationary => EnvironmentKind::Stationary(self.source.resolve(base_dir)?),
            EnvironmentKindSpec::Piecewise => {
                let segments = self
                    .segments
                    .iter()
                    .map(|s| Ok(Segment { matrix: s.source.resolve(base_dir)?, duration: s.duration }))
                    .collect::<Result<Vec<_>, HarnessError>>()?;
                EnvironmentKind::PiecewiseStationary(segments)
            }
            EnvironmentKindSpec::Rotating => {
                let base = self.source.resolve(base_dir)?;
                let period = self.period.unwrap_or(1);
                if period == 0 {
                    return Err(HarnessError::Config("`period` must be positive".into()));
                }
                let count = horizon.div_ceil(period);
                let segments = (0..count)
                    .map(|d| Segment { matrix: rotate_arms(&base, d as usize), duration: period })
                    .collect();
                EnvironmentKind::PiecewiseStationary(segments)
            }
            EnvironmentKindSpec::Drift => {
                let keyframes = self.keyframes.iter().map(|f| (f.round, f.utilities.clone())).collect();
                EnvironmentKind::UtilityDrift(UtilityPath::new(keyframes)?)
            }
        };
        Ok(Environment::new(kind, horizon)?)
    }
}

/// Relabels arms so that arm `i` of the result is arm `(i − shift) mod K` of
/// `p`; the best arm moves `shift` places to the right.
pub fn rotate_arms(p: &PreferenceMatrix, shift: usize) -> PreferenceMatrix {
    let k = p.num_arms();
    let src = |i: usize| (i + k - shift % k) % k;
    let rows: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| p.get(src(i), src(j))).collect()).collect();
    PreferenceMatrix::validate(&rows).expect("a relabelled matrix stays valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: String,
    /// Name used in outputs and for seed derivation; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl AlgorithmSpec {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), label: None, params: BTreeMap::new() }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads a config file; relative matrix paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
        let mut config = Self::from_toml_str(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        Ok(config)
    }

    /// Checks everything that can be checked without running, and builds the
    /// environment.
    pub fn validate(&self) -> Result<Environment, HarnessError> {
        if self.horizon == 0 {
            return Err(HarnessError::Config("horizon must be at least 1".into()));
        }
        self.seeds.indices()?;
        if self.algorithms.is_empty() {
            return Err(HarnessError::Config("no algorithms configured".into()));
        }
        let mut labels: Vec<&str> = Vec::new();
        for spec in &self.algorithms {
            let info = find_algorithm(&spec.name)?;
            info.resolve_params(spec)?;
            if labels.contains(&spec.label()) {
                return Err(HarnessError::Config(format!("duplicate algorithm label '{}'", spec.label())));
            }
            labels.push(spec.label());
        }
        if !(0.0..=0.5).contains(&self.environment.rho) {
            return Err(HarnessError::Config(format!(
                "rho = {} is outside [0, 1/2]",
                self.environment.rho
            )));
        }
        let env = self.environment.build(self.horizon, self.base_dir.as_deref())?;
        for spec in &self.algorithms {
            Algorithm::build(spec, env.num_arms(), self.horizon)?;
        }
        match self.comparator {
            Comparator::Condorcet => {
                let EnvironmentKind::Stationary(p) = env.kind() else {
                    return Err(HarnessError::Config(
                        "comparator = condorcet requires a stationary environment".into(),
                    ));
                };
                if p.condorcet_winner().is_none() {
                    return Err(HarnessError::Config(
                        "comparator = condorcet but the matrix has no Condorcet winner".into(),
                    ));
                }
            }
            Comparator::Fixed(k) if k >= env.num_arms() => {
                return Err(HarnessError::Config(format!(
                    "comparator arm {} out of range for {} arms",
                    k + 1,
                    env.num_arms()
                )));
            }
            _ => {}
        }
        Ok(env)
    }

    /// SHA-256 (hex) of the canonical JSON form of the config.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }
}
