//! Config-driven experiment runner.
//!
//! Every (algorithm, seed) pair is an independent simulation with its own
//! generator, derived by hashing the base seed, the algorithm label and the
//! seed index. Adding or removing an algorithm therefore never changes the
//! traces of the others, and results do not depend on thread scheduling.

mod config;
mod output;
mod registry;

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{
    rotate_arms, AlgorithmSpec, EnvironmentKindSpec, EnvironmentSpec, ExperimentConfig, KeyframeSpec,
    MatrixSource, SeedSpec, SegmentSpec,
};
pub use output::{
    format_g12, printed, regret_csv, regret_mean_csv, summary, summary_json, write_outputs, AlgorithmSummary,
    Summary,
};
pub use registry::{find_algorithm, list_algorithms, Algorithm, AlgorithmInfo, ParamInfo, ALGORITHMS};

use crate::environment::{CorruptionWrapper, Environment, EnvironmentKind};
use crate::metrics::{log_spaced_checkpoints, Comparator, MetricsError, RegretTrace};
use crate::preference::{InstanceName, PreferenceError};
use crate::StepError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unknown algorithm '{0}'")]
    UnknownAlgorithm(String),
    #[error("algorithm '{algorithm}' has no parameter '{param}'")]
    UnknownParam { algorithm: String, param: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Preference(#[from] PreferenceError),
    #[error(transparent)]
    Env(#[from] crate::environment::EnvError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Generator for one simulation: ChaCha20 keyed by
/// `SHA-256(base seed LE ‖ label ‖ 0x00 ‖ seed index LE)`.
pub fn derive_rng(base: u64, label: &str, index: u64) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(label.as_bytes());
    h.update([0u8]);
    h.update(index.to_le_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

/// One simulated (algorithm, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub algorithm: String,
    pub seed: u64,
    /// Cumulative regret against the configured comparator at each checkpoint.
    pub series: Vec<f64>,
    pub trace: RegretTrace,
    pub corruption: u64,
    /// Active arms at the end, for elimination algorithms.
    pub final_active: Option<Vec<usize>>,
    /// Largest `max n − min n` over active pairs seen after any round.
    pub max_pair_spread: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub algorithm: String,
    pub mean: Vec<f64>,
    /// Sample standard deviation (n − 1 denominator; 0 for a single seed).
    pub std: Vec<f64>,
    pub corruption_total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub config_digest: String,
    pub horizon: u64,
    pub comparator: Comparator,
    pub seeds: Vec<u64>,
    pub checkpoints: Vec<u64>,
    /// Ordered by algorithm (config order), then seed (config order).
    pub runs: Vec<SeedRun>,
    pub aggregates: Vec<Aggregate>,
}

impl RunResult {
    pub fn runs_for<'a>(&'a self, algorithm: &'a str) -> impl Iterator<Item = &'a SeedRun> + 'a {
        self.runs.iter().filter(move |r| r.algorithm == algorithm)
    }

    pub fn aggregate(&self, algorithm: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.algorithm == algorithm)
    }

    /// Mean regret of `algorithm` at checkpoint `t`, if `t` is a checkpoint.
    pub fn mean_at(&self, algorithm: &str, t: u64) -> Option<f64> {
        let i = self.checkpoints.iter().position(|&c| c == t)?;
        self.aggregate(algorithm).map(|a| a.mean[i])
    }
}

/// Runs one simulation of `spec` to the horizon of `env`.
pub fn simulate(
    env: &Environment,
    spec: &AlgorithmSpec,
    seed: u64,
    comparator: Comparator,
    rho: f64,
    checkpoints: &[u64],
    rng: &mut ChaCha20Rng,
) -> Result<SeedRun, HarnessError> {
    let k = env.num_arms();
    let horizon = env.horizon();
    let mut algorithm = Algorithm::build(spec, k, horizon)?;
    let mut source = CorruptionWrapper::with_flip_probability(env, rho)?;
    let mut trace = RegretTrace::new(k, checkpoints.to_vec());
    let mut spread: Option<u64> = None;
    for t in 1..=horizon {
        let record = algorithm.step(&mut source, t, rng)?;
        let p = env.matrix_at(t)?;
        trace.accumulate(t, &p, record.first, record.second)?;
        if let Algorithm::Elimination(state) = &algorithm {
            if let Some(s) = state.pair_count_spread() {
                spread = Some(spread.map_or(s, |m| m.max(s)));
            }
        }
    }
    trace.set_realized_corruption(source.realized_flips());
    let stationary = match env.kind() {
        EnvironmentKind::Stationary(p) => Some(p),
        _ => None,
    };
    let series = trace.series(comparator, stationary)?;
    let final_active = match &algorithm {
        Algorithm::Elimination(state) => Some(state.active_arms()),
        _ => None,
    };
    Ok(SeedRun {
        algorithm: spec.label().to_string(),
        seed,
        series,
        corruption: trace.realized_corruption(),
        trace,
        final_active,
        max_pair_spread: spread,
    })
}

/// Runs every (algorithm, seed) simulation of `config`. With `threads`, a
/// dedicated pool of that size is used; results are identical either way.
pub fn run_experiment(config: &ExperimentConfig, threads: Option<usize>) -> Result<RunResult, HarnessError> {
    match threads {
        None => run_inner(config),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::ThreadPool(e.to_string()))?
            .install(|| run_inner(config)),
    }
}

fn run_inner(config: &ExperimentConfig) -> Result<RunResult, HarnessError> {
    let env = config.validate()?;
    let seeds = config.seeds.indices()?;
    let checkpoints = log_spaced_checkpoints(config.horizon, config.checkpoints, &config.extra_checkpoints);
    let jobs: Vec<(&AlgorithmSpec, u64)> = config
        .algorithms
        .iter()
        .flat_map(|spec| seeds.iter().map(move |&s| (spec, s)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(spec, seed)| {
            let mut rng = derive_rng(config.seeds.base, spec.label(), seed);
            simulate(&env, spec, seed, config.comparator, config.environment.rho, &checkpoints, &mut rng)
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let aggregates = config
        .algorithms
        .iter()
        .map(|spec| aggregate(spec.label(), runs.iter().filter(|r| r.algorithm == spec.label())))
        .collect();
    Ok(RunResult {
        config_digest: config.digest(),
        horizon: config.horizon,
        comparator: config.comparator,
        seeds,
        checkpoints,
        runs,
        aggregates,
    })
}

fn aggregate<'a>(label: &str, runs: impl Iterator<Item = &'a SeedRun>) -> Aggregate {
    let runs: Vec<&SeedRun> = runs.collect();
    let n = runs.len();
    let len = runs.first().map_or(0, |r| r.series.len());
    let mut mean = vec![0.0; len];
    let mut std = vec![0.0; len];
    for i in 0..len {
        let m = runs.iter().map(|r| r.series[i]).sum::<f64>() / n as f64;
        mean[i] = m;
        if n > 1 {
            let ss: f64 = runs.iter().map(|r| (r.series[i] - m).powi(2)).sum();
            std[i] = (ss / (n - 1) as f64).sqrt();
        }
    }
    Aggregate {
        algorithm: label.to_string(),
        mean,
        std,
        corruption_total: runs.iter().map(|r| r.corruption).sum(),
    }
}

/// Writes the named instance with `k` arms as a CSV matrix file.
pub fn gen_matrix(name: &str, k: usize, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let name: InstanceName = name.parse()?;
    name.matrix(k)?.save_csv(path)?;
    Ok(())
}

/// Registered algorithms as JSON.
pub fn list_algorithms_json() -> String {
    serde_json::to_string_pretty(ALGORITHMS).expect("registry serializes")
}

/// Registered algorithms as a plain-text table.
pub fn list_algorithms_text() -> String {
    let mut out = String::new();
    for a in ALGORITHMS {
        let params: Vec<String> = a.params.iter().map(|p| format!("{}={}", p.name, p.default)).collect();
        out.push_str(&format!("{:<16} {}", a.name, a.description));
        if !params.is_empty() {
            out.push_str(&format!(" [{}]", params.join(", ")));
        }
        out.push('\n');
    }
    out
}
