//! Round-robin elimination for stochastic dueling bandits.
//!
//! Every round the least-compared pair of active arms is played (ties broken
//! lexicographically). An arm is dropped as soon as some active opponent
//! beats it with confidence, i.e. its upper confidence bound
//! `u(i, j) = p̂(i, j) + √(ln(K t / δ) / n(i, j))` falls below 1/2.

use rand::Rng;
use thiserror::Error;

use crate::environment::{DuelRecord, DuelSource, Outcome};
use crate::StepError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EliminationError {
    #[error("only arm {0} remains active")]
    SingleArmRemaining(usize),
    #[error("pair ({0}, {1}) is not an active pair")]
    PairNotActive(usize, usize),
    #[error("confidence parameter {0} is outside (0, 1)")]
    BadDelta(f64),
    #[error("need at least 2 arms, got {0}")]
    TooFewArms(usize),
}

/// `√(ln(K t / δ) / n)`, infinite for `n = 0`.
pub fn confidence_radius(n: u64, t: u64, k: usize, delta: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    ((k as f64 * t as f64 / delta).ln() / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliminationState {
    k: usize,
    delta: f64,
    active: Vec<bool>,
    counts: Vec<u64>,
    wins: Vec<u64>,
    round: u64,
}

impl EliminationState {
    pub fn new(k: usize, delta: f64) -> Result<Self, EliminationError> {
        if k < 2 {
            return Err(EliminationError::TooFewArms(k));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(EliminationError::BadDelta(delta));
        }
        Ok(Self {
            k,
            delta,
            active: vec![true; k],
            counts: vec![0; k * k],
            wins: vec![0; k * k],
            round: 0,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_active(&self, arm: usize) -> bool {
        self.active[arm]
    }

    pub fn active_arms(&self) -> Vec<usize> {
        (0..self.k).filter(|&a| self.active[a]).collect()
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.k + j]
    }

    pub fn wins(&self, i: usize, j: usize) -> u64 {
        self.wins[i * self.k + j]
    }

    /// Empirical probability that `i` beats `j`, 1/2 for unplayed pairs.
    pub fn empirical(&self, i: usize, j: usize) -> f64 {
        match self.count(i, j) {
            0 => 0.5,
            n => self.wins(i, j) as f64 / n as f64,
        }
    }

    pub fn ucb(&self, i: usize, j: usize, t: u64) -> f64 {
        self.empirical(i, j) + confidence_radius(self.count(i, j), t, self.k, self.delta)
    }

    /// Least-played distinct active pair, lexicographically first on ties.
    pub fn select_pair(&self) -> Result<(usize, usize), EliminationError> {
        let mut best: Option<(u64, usize, usize)> = None;
        for i in (0..self.k).filter(|&i| self.active[i]) {
            for j in ((i + 1)..self.k).filter(|&j| self.active[j]) {
                let n = self.count(i, j);
                if best.is_none_or(|(m, _, _)| n < m) {
                    best = Some((n, i, j));
                }
            }
        }
        match best {
            Some((_, i, j)) => Ok((i, j)),
            None => {
                let survivor = self.active.iter().position(|&a| a).expect("active set never empty");
                Err(EliminationError::SingleArmRemaining(survivor))
            }
        }
    }

    /// Records the observed outcome of a played duel.
    pub fn update(&mut self, record: &DuelRecord) -> Result<(), EliminationError> {
        let (a, b) = (record.first, record.second);
        if a >= self.k || b >= self.k || !self.active[a] || !self.active[b] {
            return Err(EliminationError::PairNotActive(a, b));
        }
        self.round = record.round;
        if a == b {
            return Ok(());
        }
        self.counts[a * self.k + b] += 1;
        self.counts[b * self.k + a] += 1;
        match record.observed {
            Outcome::One => self.wins[a * self.k + b] += 1,
            Outcome::Zero => self.wins[b * self.k + a] += 1,
            Outcome::Half => unreachable!("distinct arms never tie"),
        }
        Ok(())
    }

    /// Removes, simultaneously, every active arm with some active opponent
    /// `j` such that `u(i, j) < 1/2`. Returns the removed arms.
    pub fn eliminate(&mut self, t: u64) -> Vec<usize> {
        let removed: Vec<usize> = (0..self.k)
            .filter(|&i| self.active[i])
            .filter(|&i| {
                (0..self.k).any(|j| j != i && self.active[j] && self.ucb(i, j, t) < 0.5)
            })
            .collect();
        for &i in &removed {
            self.active[i] = false;
        }
        removed
    }

    /// `max n − min n` over distinct active pairs; `None` with one arm left.
    pub fn pair_count_spread(&self) -> Option<u64> {
        let mut lo = u64::MAX;
        let mut hi = 0;
        for i in (0..self.k).filter(|&i| self.active[i]) {
            for j in ((i + 1)..self.k).filter(|&j| self.active[j]) {
                let n = self.count(i, j);
                lo = lo.min(n);
                hi = hi.max(n);
            }
        }
        (lo != u64::MAX).then(|| hi - lo)
    }

    /// Select, duel, update and eliminate for round `t`. A lone survivor
    /// duels itself.
    pub fn step<E, R>(&mut self, env: &mut E, t: u64, rng: &mut R) -> Result<DuelRecord, StepError>
    where
        E: DuelSource + ?Sized,
        R: Rng + ?Sized,
    {
        if t != self.round + 1 {
            return Err(StepError::RoundMismatch { expected: self.round + 1, got: t });
        }
        let (a, b) = match self.select_pair() {
            Ok(pair) => pair,
            Err(EliminationError::SingleArmRemaining(s)) => (s, s),
            Err(e) => return Err(e.into()),
        };
        let record = env.duel(t, a, b, rng)?;
        self.update(&record)?;
        self.eliminate(t);
        Ok(record)
    }
}
