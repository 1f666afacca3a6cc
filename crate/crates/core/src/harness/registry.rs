//! Registered algorithms and their dispatch.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use super::config::AlgorithmSpec;
use super::HarnessError;
use crate::baselines::{EliminationState, RucbState, DEFAULT_ALPHA};
use crate::environment::{DuelRecord, DuelSource};
use crate::learner::MabLearnerState;
use crate::reduction::{reduction_exp3, vdb, Reduction, SharedVdb};
use crate::StepError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamInfo {
    pub name: &'static str,
    pub default: f64,
    pub description: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlgorithmInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub params: &'static [ParamInfo],
}

pub const ALGORITHMS: &[AlgorithmInfo] = &[
    AlgorithmInfo {
        name: "vdb",
        description: "two independent Tsallis-INF players",
        params: &[],
    },
    AlgorithmInfo {
        name: "vdb-shared",
        description: "one Tsallis-INF learner sampling both arms",
        params: &[],
    },
    AlgorithmInfo {
        name: "reduction:exp3",
        description: "two independent Exp3 players tuned for the horizon",
        params: &[],
    },
    AlgorithmInfo {
        name: "rr-elim",
        description: "round-robin successive elimination",
        params: &[ParamInfo { name: "delta", default: 0.1, description: "failure probability" }],
    },
    AlgorithmInfo {
        name: "rucb",
        description: "relative upper confidence bound",
        params: &[ParamInfo { name: "alpha", default: DEFAULT_ALPHA, description: "exploration parameter" }],
    },
];

pub fn list_algorithms() -> &'static [AlgorithmInfo] {
    ALGORITHMS
}

pub fn find_algorithm(name: &str) -> Result<&'static AlgorithmInfo, HarnessError> {
    ALGORITHMS
        .iter()
        .find(|a| a.name == name)
        .ok_or_else(|| HarnessError::UnknownAlgorithm(name.to_string()))
}

impl AlgorithmInfo {
    /// Parameters of `spec` with defaults filled in; unknown keys are errors.
    pub fn resolve_params(&self, spec: &AlgorithmSpec) -> Result<BTreeMap<&'static str, f64>, HarnessError> {
        if let Some(key) = spec.params.keys().find(|k| !self.params.iter().any(|p| p.name == *k)) {
            return Err(HarnessError::UnknownParam { algorithm: self.name.to_string(), param: key.clone() });
        }
        Ok(self
            .params
            .iter()
            .map(|p| (p.name, spec.params.get(p.name).copied().unwrap_or(p.default)))
            .collect())
    }
}

/// A freshly constructed algorithm of any registered kind.
#[derive(Debug, Clone)]
pub enum Algorithm {
    Reduction(Reduction<MabLearnerState>),
    Shared(SharedVdb),
    Elimination(EliminationState),
    Rucb(RucbState),
}

impl Algorithm {
    pub fn build(spec: &AlgorithmSpec, k: usize, horizon: u64) -> Result<Self, HarnessError> {
        let info = find_algorithm(&spec.name)?;
        let params = info.resolve_params(spec)?;
        Ok(match info.name {
            "vdb" => Algorithm::Reduction(vdb(k)),
            "vdb-shared" => Algorithm::Shared(SharedVdb::new(k)),
            "reduction:exp3" => Algorithm::Reduction(reduction_exp3(k, horizon)),
            "rr-elim" => Algorithm::Elimination(
                EliminationState::new(k, params["delta"]).map_err(StepError::from)?,
            ),
            "rucb" => {
                let alpha = params["alpha"];
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(HarnessError::Config(format!("rucb alpha must be positive, got {alpha}")));
                }
                Algorithm::Rucb(RucbState::new(k, alpha))
            }
            other => unreachable!("registered algorithm {other} has no constructor"),
        })
    }

    pub fn step<E, R>(&mut self, env: &mut E, t: u64, rng: &mut R) -> Result<DuelRecord, StepError>
    where
        E: DuelSource + ?Sized,
        R: Rng + ?Sized,
    {
        match self {
            Algorithm::Reduction(a) => a.step(env, t, rng),
            Algorithm::Shared(a) => a.step(env, t, rng),
            Algorithm::Elimination(a) => a.step(env, t, rng),
            Algorithm::Rucb(a) => a.step(env, t, rng),
        }
    }
}
