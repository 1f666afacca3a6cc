//! Dueling bandits via two multi-armed bandit players, with baselines,
//! regret accounting and a reproducible simulation harness.

pub mod baselines;
pub mod environment;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod preference;
pub mod reduction;

use thiserror::Error;

pub use environment::{CorruptionWrapper, DuelRecord, DuelSource, Environment, EnvironmentKind, Outcome};
pub use learner::{MabLearner, MabLearnerState, ProbVector};
pub use metrics::{Comparator, RegretTrace};
pub use preference::{named_instance, InstanceName, PreferenceMatrix};
pub use reduction::{vdb, Reduction, SharedVdb};

/// Failure of a single algorithm round.
#[derive(Debug, Error)]
pub enum StepError {
    #[error(transparent)]
    Env(#[from] environment::EnvError),
    #[error(transparent)]
    Learner(#[from] learner::LearnerError),
    #[error(transparent)]
    Elimination(#[from] baselines::EliminationError),
    #[error("step called for round {got}, expected round {expected}")]
    RoundMismatch { expected: u64, got: u64 },
}
