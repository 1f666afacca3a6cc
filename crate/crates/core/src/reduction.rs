//! Dueling bandits through two multi-armed bandit players.
//!
//! Player +1 picks the first arm of the duel and player −1 the second. Each
//! player's loss is the (observed) probability-one event that the opponent's
//! arm beat its own: `ℓ_{+1} = 1 − õ(k₊, k₋)` and `ℓ_{−1} = õ(k₊, k₋)`.
//! A self-duel feeds 1/2 to both.

use rand::Rng;

use crate::environment::{DuelRecord, DuelSource, Outcome};
use crate::learner::{iw_estimate, LearnerError, MabLearner, MabLearnerState, ProbVector};
use crate::preference::PreferenceMatrix;
use crate::StepError;

/// Losses `(player +1, player −1)` for a duel whose first arm obtained
/// `observed`.
pub fn duel_losses(observed: Outcome) -> (f64, f64) {
    let o = observed.value();
    (1.0 - o, o)
}

/// Per-player pseudo-regret against every fixed comparator, using the true
/// preferences. `½ (plus[k] + minus[k])` is the dueling regret against `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerRegret {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

impl PlayerRegret {
    pub fn new(k: usize) -> Self {
        Self { plus: vec![0.0; k], minus: vec![0.0; k] }
    }

    /// Adds one round in which `first` and `second` were played under `p`.
    pub fn accumulate(&mut self, p: &PreferenceMatrix, first: usize, second: usize) {
        for k in 0..self.plus.len() {
            // expected loss of arm x for player +1 is P(second, x)
            self.plus[k] += p.get(second, first) - p.get(second, k);
            self.minus[k] += p.get(first, second) - p.get(first, k);
        }
    }

    pub fn dueling_regret(&self, comparator: usize) -> f64 {
        0.5 * (self.plus[comparator] + self.minus[comparator])
    }
}

/// Two independent bandit learners playing against each other.
#[derive(Debug, Clone)]
pub struct Reduction<L> {
    plus: L,
    minus: L,
    round: u64,
}

impl<L: MabLearner> Reduction<L> {
    pub fn new(plus: L, minus: L) -> Self {
        let round = plus.round();
        Self { plus, minus, round }
    }

    pub fn plus(&self) -> &L {
        &self.plus
    }

    pub fn minus(&self) -> &L {
        &self.minus
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// One round: both players select, the duel is played and each player
    /// is fed its loss from the observed outcome.
    pub fn step<E, R>(&mut self, env: &mut E, t: u64, rng: &mut R) -> Result<DuelRecord, StepError>
    where
        E: DuelSource + ?Sized,
        R: Rng + ?Sized,
    {
        if t != self.round || self.plus.round() != t || self.minus.round() != t {
            return Err(StepError::RoundMismatch { expected: self.round, got: t });
        }
        let (first, p_plus) = self.plus.select(rng)?;
        let (second, p_minus) = self.minus.select(rng)?;
        let record = env.duel(t, first, second, rng)?;
        self.observe(&record, &p_plus, &p_minus)?;
        Ok(record)
    }

    /// Feeds a duel record to both players given the distributions their
    /// arms were drawn from.
    pub fn observe(
        &mut self,
        record: &DuelRecord,
        p_plus: &ProbVector,
        p_minus: &ProbVector,
    ) -> Result<(), LearnerError> {
        let (loss_plus, loss_minus) = duel_losses(record.observed);
        self.plus.update(record.first, loss_plus, p_plus)?;
        self.minus.update(record.second, loss_minus, p_minus)?;
        self.round += 1;
        Ok(())
    }
}

/// The best-of-both-worlds algorithm: two Tsallis-INF players.
pub fn vdb(k: usize) -> Reduction<MabLearnerState> {
    Reduction::new(MabLearnerState::tsallis_inf(k), MabLearnerState::tsallis_inf(k))
}

/// The reduction with two Exp3 players tuned for `horizon`.
pub fn reduction_exp3(k: usize, horizon: u64) -> Reduction<MabLearnerState> {
    Reduction::new(MabLearnerState::exp3(k, horizon), MabLearnerState::exp3(k, horizon))
}

/// Shared importance-weighted estimate: the average of the two players'
/// estimates when both arms are drawn from the same `p`.
pub fn shared_estimate(
    first: usize,
    second: usize,
    observed: Outcome,
    p: &ProbVector,
) -> Result<Vec<f64>, LearnerError> {
    let (loss_plus, loss_minus) = duel_losses(observed);
    let a = iw_estimate(first, p, loss_plus)?;
    let b = iw_estimate(second, p, loss_minus)?;
    Ok(a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect())
}

/// Single Tsallis-INF learner whose distribution is used for both arms.
#[derive(Debug, Clone)]
pub struct SharedVdb {
    learner: MabLearnerState,
}

impl SharedVdb {
    pub fn new(k: usize) -> Self {
        Self { learner: MabLearnerState::tsallis_inf(k) }
    }

    pub fn learner(&self) -> &MabLearnerState {
        &self.learner
    }

    pub fn step<E, R>(&mut self, env: &mut E, t: u64, rng: &mut R) -> Result<DuelRecord, StepError>
    where
        E: DuelSource + ?Sized,
        R: Rng + ?Sized,
    {
        if t != self.learner.round() {
            return Err(StepError::RoundMismatch { expected: self.learner.round(), got: t });
        }
        let p = self.learner.distribution()?;
        let first = p.sample(rng);
        let second = p.sample(rng);
        let record = env.duel(t, first, second, rng)?;
        let estimate = shared_estimate(first, second, record.observed, &p)?;
        self.learner.apply_estimate(&estimate)?;
        Ok(record)
    }
}
