//! Duel-outcome generators: stationary, piecewise-stationary and
//! utility-drift preference sequences, plus outcome corruption.

use std::borrow::Cow;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preference::{PreferenceError, PreferenceMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("round {t} is outside the horizon 1..={horizon}")]
    OutOfHorizon { t: u64, horizon: u64 },
    #[error("arm index {index} out of range for {k} arms")]
    ArmOutOfRange { index: usize, k: usize },
    #[error("invalid environment: {0}")]
    Invalid(String),
    #[error("flip probability {0} is outside [0, 1/2]")]
    BadFlipProbability(f64),
    #[error(transparent)]
    Preference(#[from] PreferenceError),
}

/// Result of one duel from the point of view of the first arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// The second arm won.
    Zero,
    /// The first arm won.
    One,
    /// Self-duel.
    Half,
}

impl Outcome {
    pub fn value(self) -> f64 {
        match self {
            Outcome::Zero => 0.0,
            Outcome::One => 1.0,
            Outcome::Half => 0.5,
        }
    }

    /// Outcome seen from the other arm.
    pub fn flipped(self) -> Self {
        match self {
            Outcome::Zero => Outcome::One,
            Outcome::One => Outcome::Zero,
            Outcome::Half => Outcome::Half,
        }
    }
}

/// One round's duel. `first` is the arm of player +1, `second` of player -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuelRecord {
    pub round: u64,
    pub first: usize,
    pub second: usize,
    pub raw: Outcome,
    pub observed: Outcome,
}

impl DuelRecord {
    pub fn is_self_duel(&self) -> bool {
        self.first == self.second
    }

    pub fn is_corrupted(&self) -> bool {
        self.raw != self.observed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub matrix: PreferenceMatrix,
    pub duration: u64,
}

/// Piecewise-linear path of utility vectors. Between two keyframes the
/// utilities are linearly interpolated; outside the keyframe range they are
/// held constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityPath {
    keyframes: Vec<(u64, Vec<f64>)>,
}

impl UtilityPath {
    pub fn new(keyframes: Vec<(u64, Vec<f64>)>) -> Result<Self, EnvError> {
        let Some((_, first)) = keyframes.first() else {
            return Err(EnvError::Invalid("utility path needs at least one keyframe".into()));
        };
        let k = first.len();
        if k < 2 {
            return Err(PreferenceError::TooFewArms(k).into());
        }
        for (n, (_, theta)) in keyframes.iter().enumerate() {
            if theta.len() != k {
                return Err(EnvError::Invalid(format!(
                    "keyframe {n} has {} utilities, expected {k}",
                    theta.len()
                )));
            }
            if let Some(i) = theta.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(PreferenceError::NonPositiveUtility(i).into());
            }
        }
        if keyframes.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(EnvError::Invalid("keyframe rounds must be strictly increasing".into()));
        }
        Ok(Self { keyframes })
    }

    pub fn num_arms(&self) -> usize {
        self.keyframes[0].1.len()
    }

    fn utility(&self, t: u64, arm: usize) -> f64 {
        let idx = self.keyframes.partition_point(|(r, _)| *r <= t);
        if idx == 0 {
            return self.keyframes[0].1[arm];
        }
        if idx == self.keyframes.len() {
            return self.keyframes[idx - 1].1[arm];
        }
        let (t0, th0) = &self.keyframes[idx - 1];
        let (t1, th1) = &self.keyframes[idx];
        let w = (t - t0) as f64 / (t1 - t0) as f64;
        (1.0 - w) * th0[arm] + w * th1[arm]
    }

    pub fn utilities_at(&self, t: u64) -> Vec<f64> {
        (0..self.num_arms()).map(|a| self.utility(t, a)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EnvironmentKind {
    Stationary(PreferenceMatrix),
    PiecewiseStationary(Vec<Segment>),
    UtilityDrift(UtilityPath),
}

/// An immutable sequence of preference matrices over rounds `1..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    kind: EnvironmentKind,
    horizon: u64,
    k: usize,
    // cumulative segment ends, piecewise only
    segment_ends: Vec<u64>,
}

impl Environment {
    pub fn new(kind: EnvironmentKind, horizon: u64) -> Result<Self, EnvError> {
        if horizon == 0 {
            return Err(EnvError::Invalid("horizon must be at least 1".into()));
        }
        let mut segment_ends = Vec::new();
        let k = match &kind {
            EnvironmentKind::Stationary(p) => p.num_arms(),
            EnvironmentKind::PiecewiseStationary(segments) => {
                let Some(first) = segments.first() else {
                    return Err(EnvError::Invalid("piecewise environment has no segments".into()));
                };
                let k = first.matrix.num_arms();
                let mut end = 0u64;
                for (n, s) in segments.iter().enumerate() {
                    if s.matrix.num_arms() != k {
                        return Err(EnvError::Invalid(format!(
                            "segment {n} has {} arms, expected {k}",
                            s.matrix.num_arms()
                        )));
                    }
                    if s.duration == 0 {
                        return Err(EnvError::Invalid(format!("segment {n} has zero duration")));
                    }
                    end += s.duration;
                    segment_ends.push(end);
                }
                if end < horizon {
                    return Err(EnvError::Invalid(format!(
                        "segment durations sum to {end}, shorter than the horizon {horizon}"
                    )));
                }
                k
            }
            EnvironmentKind::UtilityDrift(path) => path.num_arms(),
        };
        Ok(Self { kind, horizon, k, segment_ends })
    }

    pub fn stationary(matrix: PreferenceMatrix, horizon: u64) -> Result<Self, EnvError> {
        Self::new(EnvironmentKind::Stationary(matrix), horizon)
    }

    pub fn kind(&self) -> &EnvironmentKind {
        &self.kind
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn num_arms(&self) -> usize {
        self.k
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self.kind, EnvironmentKind::Stationary(_))
    }

    fn check_round(&self, t: u64) -> Result<(), EnvError> {
        if t == 0 || t > self.horizon {
            return Err(EnvError::OutOfHorizon { t, horizon: self.horizon });
        }
        Ok(())
    }

    fn check_arm(&self, a: usize) -> Result<(), EnvError> {
        if a >= self.k {
            return Err(EnvError::ArmOutOfRange { index: a, k: self.k });
        }
        Ok(())
    }

    fn segment_index(&self, t: u64) -> usize {
        // segment d covers (end_{d-1}, end_d]
        self.segment_ends.partition_point(|&end| end < t)
    }

    /// The matrix in force at round `t`.
    pub fn matrix_at(&self, t: u64) -> Result<Cow<'_, PreferenceMatrix>, EnvError> {
        self.check_round(t)?;
        Ok(match &self.kind {
            EnvironmentKind::Stationary(p) => Cow::Borrowed(p),
            EnvironmentKind::PiecewiseStationary(segments) => {
                Cow::Borrowed(&segments[self.segment_index(t)].matrix)
            }
            EnvironmentKind::UtilityDrift(path) => {
                Cow::Owned(PreferenceMatrix::plackett_luce(&path.utilities_at(t))?)
            }
        })
    }

    /// `P_t(a, b)` without materializing the whole matrix.
    pub fn preference(&self, t: u64, a: usize, b: usize) -> Result<f64, EnvError> {
        self.check_round(t)?;
        self.check_arm(a)?;
        self.check_arm(b)?;
        if a == b {
            return Ok(0.5);
        }
        Ok(match &self.kind {
            EnvironmentKind::Stationary(p) => p.get(a, b),
            EnvironmentKind::PiecewiseStationary(segments) => {
                segments[self.segment_index(t)].matrix.get(a, b)
            }
            EnvironmentKind::UtilityDrift(path) => {
                let (ua, ub) = (path.utility(t, a), path.utility(t, b));
                ua / (ua + ub)
            }
        })
    }

    /// Samples the duel `(a, b)` at round `t`. Self-duels return `Half`
    /// without touching the generator.
    pub fn sample_duel<R: Rng + ?Sized>(
        &self,
        t: u64,
        a: usize,
        b: usize,
        rng: &mut R,
    ) -> Result<DuelRecord, EnvError> {
        let p = self.preference(t, a, b)?;
        let raw = if a == b {
            Outcome::Half
        } else if rng.random::<f64>() < p {
            Outcome::One
        } else {
            Outcome::Zero
        };
        Ok(DuelRecord { round: t, first: a, second: b, raw, observed: raw })
    }
}

/// Anything that can answer duel queries. Implemented by the plain
/// environment and by the corruption wrapper.
pub trait DuelSource {
    fn num_arms(&self) -> usize;

    fn duel<R: Rng + ?Sized>(
        &mut self,
        t: u64,
        a: usize,
        b: usize,
        rng: &mut R,
    ) -> Result<DuelRecord, EnvError>;
}

impl DuelSource for Environment {
    fn num_arms(&self) -> usize {
        self.k
    }

    fn duel<R: Rng + ?Sized>(
        &mut self,
        t: u64,
        a: usize,
        b: usize,
        rng: &mut R,
    ) -> Result<DuelRecord, EnvError> {
        self.sample_duel(t, a, b, rng)
    }
}

/// Policy deciding which observed outcomes get flipped.
pub trait CorruptionStrategy {
    /// Whether the observed outcome of `record` should be flipped. Never
    /// called for self-duels.
    fn should_flip(&mut self, record: &DuelRecord, rng: &mut dyn rand::RngCore) -> bool;
}

/// Flips each off-diagonal outcome independently with a fixed probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomFlip {
    rho: f64,
}

impl RandomFlip {
    pub fn new(rho: f64) -> Result<Self, EnvError> {
        if !(0.0..=0.5).contains(&rho) {
            return Err(EnvError::BadFlipProbability(rho));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

impl CorruptionStrategy for RandomFlip {
    fn should_flip(&mut self, _record: &DuelRecord, rng: &mut dyn rand::RngCore) -> bool {
        // rho = 0 consumes nothing so the wrapper is indistinguishable from the inner env
        self.rho > 0.0 && rng.random::<f64>() < self.rho
    }
}

/// Environment whose observed outcomes may be corrupted. Counts every flip.
pub struct CorruptionWrapper<'a, S = RandomFlip> {
    inner: &'a Environment,
    strategy: S,
    realized_flips: u64,
}

impl<'a> CorruptionWrapper<'a, RandomFlip> {
    pub fn with_flip_probability(inner: &'a Environment, rho: f64) -> Result<Self, EnvError> {
        Ok(Self::new(inner, RandomFlip::new(rho)?))
    }
}

impl<'a, S: CorruptionStrategy> CorruptionWrapper<'a, S> {
    pub fn new(inner: &'a Environment, strategy: S) -> Self {
        Self { inner, strategy, realized_flips: 0 }
    }

    pub fn inner(&self) -> &'a Environment {
        self.inner
    }

    pub fn realized_flips(&self) -> u64 {
        self.realized_flips
    }

    /// Applies the corruption strategy to a freshly sampled record.
    pub fn corrupt<R: Rng + ?Sized>(&mut self, mut record: DuelRecord, rng: &mut R) -> DuelRecord {
        if record.is_self_duel() {
            return record;
        }
        if self.strategy.should_flip(&record, &mut DynRng(rng)) {
            record.observed = record.raw.flipped();
            self.realized_flips += 1;
        }
        record
    }
}

impl<S: CorruptionStrategy> DuelSource for CorruptionWrapper<'_, S> {
    fn num_arms(&self) -> usize {
        self.inner.num_arms()
    }

    fn duel<R: Rng + ?Sized>(
        &mut self,
        t: u64,
        a: usize,
        b: usize,
        rng: &mut R,
    ) -> Result<DuelRecord, EnvError> {
        let record = self.inner.sample_duel(t, a, b, rng)?;
        Ok(self.corrupt(record, rng))
    }
}

// Adapter so unsized generators can be passed as `&mut dyn RngCore`.
struct DynRng<'r, R: ?Sized>(&'r mut R);

impl<R: Rng + ?Sized> rand::RngCore for DynRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preference::named_instance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn two_arm(p: f64) -> PreferenceMatrix {
        PreferenceMatrix::validate(&[vec![0.5, p], vec![1.0 - p, 0.5]]).unwrap()
    }

    #[test]
    fn stationary_matrix_is_constant() {
        let p = named_instance("hard", 5).unwrap();
        let env = Environment::stationary(p.clone(), 100).unwrap();
        assert_eq!(*env.matrix_at(1).unwrap(), p);
        assert_eq!(*env.matrix_at(100).unwrap(), p);
        assert_eq!(
            env.matrix_at(101).unwrap_err(),
            EnvError::OutOfHorizon { t: 101, horizon: 100 }
        );
        assert!(env.matrix_at(0).is_err());
    }

    #[test]
    fn piecewise_boundaries_are_left_open_right_closed() {
        let (p1, p2) = (two_arm(0.8), two_arm(0.2));
        let env = Environment::new(
            EnvironmentKind::PiecewiseStationary(vec![
                Segment { matrix: p1.clone(), duration: 500 },
                Segment { matrix: p2.clone(), duration: 500 },
            ]),
            1000,
        )
        .unwrap();
        assert_eq!(*env.matrix_at(1).unwrap(), p1);
        assert_eq!(*env.matrix_at(500).unwrap(), p1);
        assert_eq!(*env.matrix_at(501).unwrap(), p2);
        assert_eq!(*env.matrix_at(1000).unwrap(), p2);
        assert_eq!(env.preference(501, 0, 1).unwrap(), 0.2);
    }

    #[test]
    fn piecewise_must_cover_horizon() {
        let err = Environment::new(
            EnvironmentKind::PiecewiseStationary(vec![Segment {
                matrix: two_arm(0.6),
                duration: 10,
            }]),
            11,
        )
        .unwrap_err();
        assert!(matches!(err, EnvError::Invalid(_)));
    }

    #[test]
    fn utility_drift_swaps_the_winner() {
        let horizon = 1000;
        let path = UtilityPath::new(vec![
            (1, vec![1.0, 0.6, 0.3]),
            (horizon / 2, vec![1.0, 0.6, 0.3]),
            (horizon / 2 + 1, vec![0.6, 1.0, 0.3]),
        ])
        .unwrap();
        let env = Environment::new(EnvironmentKind::UtilityDrift(path), horizon).unwrap();
        assert_eq!(env.matrix_at(1).unwrap().condorcet_winner(), Some(0));
        assert_eq!(env.matrix_at(horizon / 2).unwrap().condorcet_winner(), Some(0));
        assert_eq!(env.matrix_at(horizon / 2 + 1).unwrap().condorcet_winner(), Some(1));
        assert_eq!(env.matrix_at(horizon).unwrap().condorcet_winner(), Some(1));
        let m = env.matrix_at(700).unwrap();
        assert_eq!(env.preference(700, 1, 2).unwrap(), m.get(1, 2));
    }

    #[test]
    fn utility_drift_interpolates() {
        let path = UtilityPath::new(vec![(1, vec![1.0, 1.0]), (11, vec![1.0, 3.0])]).unwrap();
        assert_eq!(path.utilities_at(6), vec![1.0, 2.0]);
        assert_eq!(path.utilities_at(50), vec![1.0, 3.0]);
        assert!(UtilityPath::new(vec![(5, vec![1.0, 1.0]), (5, vec![1.0, 2.0])]).is_err());
        assert!(UtilityPath::new(vec![(1, vec![1.0, 0.0])]).is_err());
    }

    #[test]
    fn degenerate_and_self_duels() {
        let env = Environment::stationary(two_arm(1.0), 10).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for t in 1..=10 {
            assert_eq!(env.sample_duel(t, 0, 1, &mut rng).unwrap().raw, Outcome::One);
            assert_eq!(env.sample_duel(t, 1, 0, &mut rng).unwrap().raw, Outcome::Zero);
        }
        let before = rng.clone();
        let r = env.sample_duel(1, 1, 1, &mut rng).unwrap();
        assert_eq!(r.raw, Outcome::Half);
        assert_eq!(r.observed, Outcome::Half);
        assert_eq!(rng, before);
        assert!(matches!(
            env.sample_duel(1, 0, 2, &mut rng),
            Err(EnvError::ArmOutOfRange { index: 2, k: 2 })
        ));
    }

    #[test]
    fn bernoulli_frequency_matches_preference() {
        let env = Environment::stationary(two_arm(0.7), 1).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let n = 100_000;
        let wins = (0..n)
            .filter(|_| env.sample_duel(1, 0, 1, &mut rng).unwrap().raw == Outcome::One)
            .count();
        let freq = wins as f64 / n as f64;
        assert!((freq - 0.7).abs() < 0.01, "{freq}");
    }

    #[test]
    fn zero_flip_rate_is_transparent() {
        let p = named_instance("medium", 6).unwrap();
        let env = Environment::stationary(p, 1000).unwrap();
        let mut plain = env.clone();
        let mut wrapped = CorruptionWrapper::with_flip_probability(&env, 0.0).unwrap();
        let mut r1 = ChaCha20Rng::seed_from_u64(5);
        let mut r2 = ChaCha20Rng::seed_from_u64(5);
        for t in 1..=1000 {
            let (a, b) = ((t % 6) as usize, ((t / 6) % 6) as usize);
            let x = plain.duel(t, a, b, &mut r1).unwrap();
            let y = wrapped.duel(t, a, b, &mut r2).unwrap();
            assert_eq!(x, y);
        }
        assert_eq!(wrapped.realized_flips(), 0);
    }

    #[test]
    fn flip_rate_and_effective_matrix() {
        let env = Environment::stationary(two_arm(0.7), 1).unwrap();
        let mut wrapped = CorruptionWrapper::with_flip_probability(&env, 0.2).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(19);
        let n = 100_000u64;
        let mut observed_wins = 0u64;
        let mut disagreements = 0u64;
        for _ in 0..n {
            let r = wrapped.duel(1, 0, 1, &mut rng).unwrap();
            if r.observed == Outcome::One {
                observed_wins += 1;
            }
            if r.is_corrupted() {
                disagreements += 1;
            }
        }
        assert_eq!(disagreements, wrapped.realized_flips());
        let flip_freq = wrapped.realized_flips() as f64 / n as f64;
        assert!((flip_freq - 0.2).abs() < 0.01, "{flip_freq}");
        let effective = (1.0 - 2.0 * 0.2) * 0.7 + 0.2;
        let win_freq = observed_wins as f64 / n as f64;
        assert!((win_freq - effective).abs() < 0.01, "{win_freq} vs {effective}");
    }

    #[test]
    fn corrupt_leaves_self_duels_alone() {
        let env = Environment::stationary(two_arm(0.7), 10).unwrap();
        let mut wrapped = CorruptionWrapper::with_flip_probability(&env, 0.5).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for t in 1..=10 {
            let rec = env.sample_duel(t, 1, 1, &mut rng).unwrap();
            assert_eq!(wrapped.corrupt(rec, &mut rng), rec);
        }
        assert_eq!(wrapped.realized_flips(), 0);
        assert!(CorruptionWrapper::with_flip_probability(&env, 0.6).is_err());
    }

    #[test]
    fn duel_sequence_is_deterministic() {
        let env = Environment::stationary(named_instance("hard", 4).unwrap(), 200).unwrap();
        let run = |seed| {
            let mut w = CorruptionWrapper::with_flip_probability(&env, 0.3).unwrap();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            (1..=200)
                .map(|t| w.duel(t, (t % 4) as usize, ((t + 1) % 4) as usize, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(8), run(8));
        assert_ne!(run(8), run(9));
    }
}
