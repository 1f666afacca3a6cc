//! Baseline dueling-bandit algorithms.

pub mod elimination;
pub mod rucb;

pub use elimination::{confidence_radius, EliminationError, EliminationState};
pub use rucb::{RucbState, DEFAULT_ALPHA};
