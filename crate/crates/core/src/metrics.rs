//! Pseudo-regret accounting.
//!
//! Regret against a fixed arm `k` for the duel `(a, b)` under the true
//! matrix `P_t` is `½ (P_t(k, a) + P_t(k, b) − 1)`. Sums for every
//! comparator are maintained online, so the best fixed arm in hindsight is
//! the maximum over them. Corrupted observations never enter these sums.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preference::PreferenceMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("round {got} accumulated out of order (expected {expected})")]
    OutOfOrderRound { expected: u64, got: u64 },
    #[error("the preference matrix has no Condorcet winner")]
    NoCondorcetWinner,
    #[error("comparator arm {index} out of range for {k} arms")]
    ComparatorOutOfRange { index: usize, k: usize },
    #[error("invalid comparator '{0}' (expected condorcet, best-fixed or fixed:<arm>)")]
    BadComparator(String),
    #[error("arm count mismatch: trace has {trace} arms, matrix has {matrix}")]
    ArmCountMismatch { trace: usize, matrix: usize },
}

/// Instantaneous regret of the duel `(a, b)` against comparator `k_star`.
#[inline]
pub fn instant_regret(p: &PreferenceMatrix, k_star: usize, a: usize, b: usize) -> f64 {
    0.5 * (p.get(k_star, a) + p.get(k_star, b) - 1.0)
}

/// Which comparator a regret series is measured against. Arms are 0-indexed;
/// the text form `fixed:<arm>` is 1-indexed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Comparator {
    Condorcet,
    BestFixed,
    Fixed(usize),
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Comparator::Condorcet => f.write_str("condorcet"),
            Comparator::BestFixed => f.write_str("best-fixed"),
            Comparator::Fixed(k) => write!(f, "fixed:{}", k + 1),
        }
    }
}

impl FromStr for Comparator {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MetricsError::BadComparator(s.to_string());
        match s.trim() {
            "condorcet" => Ok(Comparator::Condorcet),
            "best-fixed" => Ok(Comparator::BestFixed),
            other => {
                let arm = other.strip_prefix("fixed:").ok_or_else(bad)?;
                let arm: usize = arm.trim().parse().map_err(|_| bad())?;
                if arm == 0 {
                    return Err(bad());
                }
                Ok(Comparator::Fixed(arm - 1))
            }
        }
    }
}

impl TryFrom<String> for Comparator {
    type Error = MetricsError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Comparator> for String {
    fn from(c: Comparator) -> Self {
        c.to_string()
    }
}

/// Rounds at which cumulative regret is recorded: `count` log-spaced rounds
/// from 10 to the horizon, any extra rounds, and the horizon itself.
pub fn log_spaced_checkpoints(horizon: u64, count: usize, extra: &[u64]) -> Vec<u64> {
    let start = 10.min(horizon) as f64;
    let end = horizon as f64;
    let mut points: Vec<u64> = match count {
        0 => Vec::new(),
        1 => vec![horizon],
        n => (0..n)
            .map(|i| {
                let frac = i as f64 / (n - 1) as f64;
                (start * (end / start).powf(frac)).round() as u64
            })
            .collect(),
    };
    points.extend(extra.iter().copied().filter(|&t| t >= 1 && t <= horizon));
    points.push(horizon);
    points.retain(|&t| t >= 1 && t <= horizon);
    points.sort_unstable();
    points.dedup();
    points
}

/// Cumulative regret against every fixed arm, snapshotted at checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    k: usize,
    checkpoints: Vec<u64>,
    next: usize,
    last_round: u64,
    sums: Vec<f64>,
    snapshots: Vec<Vec<f64>>,
    realized_corruption: u64,
}

impl RegretTrace {
    /// `checkpoints` must be strictly increasing and start at 1 or later.
    pub fn new(k: usize, checkpoints: Vec<u64>) -> Self {
        debug_assert!(checkpoints.windows(2).all(|w| w[0] < w[1]));
        Self {
            k,
            snapshots: Vec::with_capacity(checkpoints.len()),
            checkpoints,
            next: 0,
            last_round: 0,
            sums: vec![0.0; k],
            realized_corruption: 0,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.k
    }

    /// Rounds recorded so far.
    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints[..self.snapshots.len()]
    }

    pub fn last_round(&self) -> u64 {
        self.last_round
    }

    /// Running sums `R_t(k)` for every comparator `k`.
    pub fn running(&self) -> &[f64] {
        &self.sums
    }

    pub fn realized_corruption(&self) -> u64 {
        self.realized_corruption
    }

    pub fn set_realized_corruption(&mut self, flips: u64) {
        self.realized_corruption = flips;
    }

    /// Adds round `t`, in which `(a, b)` was played under `p`.
    pub fn accumulate(
        &mut self,
        t: u64,
        p: &PreferenceMatrix,
        a: usize,
        b: usize,
    ) -> Result<(), MetricsError> {
        if t != self.last_round + 1 {
            return Err(MetricsError::OutOfOrderRound { expected: self.last_round + 1, got: t });
        }
        if p.num_arms() != self.k {
            return Err(MetricsError::ArmCountMismatch { trace: self.k, matrix: p.num_arms() });
        }
        for (k, sum) in self.sums.iter_mut().enumerate() {
            *sum += instant_regret(p, k, a, b);
        }
        self.last_round = t;
        if self.checkpoints.get(self.next) == Some(&t) {
            self.snapshots.push(self.sums.clone());
            self.next += 1;
        }
        Ok(())
    }

    /// Regret against arm `k` at each recorded checkpoint.
    pub fn comparator_series(&self, k: usize) -> Result<Vec<f64>, MetricsError> {
        if k >= self.k {
            return Err(MetricsError::ComparatorOutOfRange { index: k, k: self.k });
        }
        Ok(self.snapshots.iter().map(|s| s[k]).collect())
    }

    /// Regret against the best fixed arm in hindsight at each checkpoint.
    pub fn best_fixed_series(&self) -> Vec<f64> {
        self.snapshots
            .iter()
            .map(|s| s.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    /// Series for a comparator. `Condorcet` is resolved against `p`, which
    /// must be the (stationary) matrix of the run.
    pub fn series(
        &self,
        comparator: Comparator,
        p: Option<&PreferenceMatrix>,
    ) -> Result<Vec<f64>, MetricsError> {
        match comparator {
            Comparator::BestFixed => Ok(self.best_fixed_series()),
            Comparator::Fixed(k) => self.comparator_series(k),
            Comparator::Condorcet => {
                let p = p.ok_or(MetricsError::NoCondorcetWinner)?;
                condorcet_regret(self, p)
            }
        }
    }
}

/// Regret series against the Condorcet winner of `p`.
pub fn condorcet_regret(trace: &RegretTrace, p: &PreferenceMatrix) -> Result<Vec<f64>, MetricsError> {
    let cw = p.condorcet_winner().ok_or(MetricsError::NoCondorcetWinner)?;
    trace.comparator_series(cw)
}
