//! Relative upper confidence bound (RUCB) baseline.

use rand::Rng;

use crate::environment::{DuelRecord, DuelSource, Outcome};
use crate::StepError;

/// Default exploration parameter.
pub const DEFAULT_ALPHA: f64 = 0.6;

#[derive(Debug, Clone, PartialEq)]
pub struct RucbState {
    k: usize,
    alpha: f64,
    wins: Vec<u64>,
    hypothesized_best: Option<usize>,
    round: u64,
}

impl RucbState {
    pub fn new(k: usize, alpha: f64) -> Self {
        Self { k, alpha, wins: vec![0; k * k], hypothesized_best: None, round: 0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn wins(&self, i: usize, j: usize) -> u64 {
        self.wins[i * self.k + j]
    }

    /// Last arm that was the only plausible champion, if any.
    pub fn hypothesized_best(&self) -> Option<usize> {
        self.hypothesized_best
    }

    /// Optimistic estimate of `P(i, j)` at round `t`, capped at 1.
    pub fn ucb(&self, i: usize, j: usize, t: u64) -> f64 {
        if i == j {
            return 0.5;
        }
        let (w, l) = (self.wins(i, j), self.wins(j, i));
        let n = w + l;
        if n == 0 {
            return 1.0;
        }
        let bonus = (self.alpha * (t as f64).ln() / n as f64).sqrt();
        (w as f64 / n as f64 + bonus).min(1.0)
    }

    /// Arms whose optimistic win rate against every other arm is at least 1/2.
    pub fn champion_candidates(&self, t: u64) -> Vec<usize> {
        (0..self.k)
            .filter(|&i| (0..self.k).all(|j| j == i || self.ucb(i, j, t) >= 0.5))
            .collect()
    }

    pub fn step<E, R>(&mut self, env: &mut E, t: u64, rng: &mut R) -> Result<DuelRecord, StepError>
    where
        E: DuelSource + ?Sized,
        R: Rng + ?Sized,
    {
        if t != self.round + 1 {
            return Err(StepError::RoundMismatch { expected: self.round + 1, got: t });
        }
        let candidates = self.champion_candidates(t);
        let champion = match candidates.len() {
            0 => rng.random_range(0..self.k),
            n => {
                if n == 1 {
                    self.hypothesized_best = Some(candidates[0]);
                }
                candidates[rng.random_range(0..n)]
            }
        };
        let mut challenger = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for j in (0..self.k).filter(|&j| j != champion) {
            let u = self.ucb(j, champion, t);
            if u > best {
                best = u;
                challenger = j;
            }
        }
        let record = env.duel(t, champion, challenger, rng)?;
        match record.observed {
            Outcome::One => self.wins[champion * self.k + challenger] += 1,
            Outcome::Zero => self.wins[challenger * self.k + champion] += 1,
            Outcome::Half => {}
        }
        self.round = t;
        Ok(record)
    }
}
