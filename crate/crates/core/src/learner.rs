//! Adversarial multi-armed bandit learners with bandit feedback.
//!
//! Two learners are provided, both driven by cumulative importance-weighted
//! loss estimates:
//!
//! - **Tsallis-INF**: online mirror descent with the 1/2-Tsallis entropy
//!   regularizer and learning rate `η_t = 4/√t`. The mirror step has the
//!   closed form `p_k = 4 (η_t (L̂_k − x))^-2`, where the normalizer `x` is
//!   found with a bracketed Newton iteration.
//! - **Exp3**: exponential weights with a fixed learning rate.
//!
//! Losses must lie in `[0, 1]`.

use rand::Rng;
use thiserror::Error;

/// Tolerance on `|Σ p − 1|` for a valid probability vector.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

const NEWTON_TOLERANCE: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("normalizer search did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("chosen arm {0} has zero probability")]
    ZeroProbabilityChosen(usize),
    #[error("loss {0} is outside [0, 1]")]
    LossOutOfRange(f64),
    #[error("arm index {index} out of range for {k} arms")]
    ArmOutOfRange { index: usize, k: usize },
    #[error("round index must be at least 1")]
    ZeroRound,
    #[error("loss estimates must be finite")]
    NonFiniteLoss,
    #[error("not a probability vector: {0}")]
    NotADistribution(String),
    #[error("a learner needs at least 1 arm")]
    NoArms,
}

/// A probability distribution over arms.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self, LearnerError> {
        if p.is_empty() {
            return Err(LearnerError::NoArms);
        }
        if p.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(LearnerError::NotADistribution("negative or non-finite entry".into()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(LearnerError::NotADistribution(format!("entries sum to {sum}")));
        }
        Ok(Self(p))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, arm: usize) -> f64 {
        self.0[arm]
    }

    /// Inverse-CDF sampling with a single uniform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, &p) in self.0.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        // u landed in the rounding slack above the last partial sum
        self.0.iter().rposition(|&p| p > 0.0).unwrap_or(self.0.len() - 1)
    }
}

/// Tsallis-INF learning rate `4/√t`.
pub fn tsallis_learning_rate(t: u64) -> f64 {
    4.0 / (t as f64).sqrt()
}

/// Mirror step of Tsallis-INF: the minimizer over the simplex of
/// `⟨p, L̂⟩ − √t Σ_k √p_k`.
pub fn tsallis_distribution(losses: &[f64], t: u64) -> Result<ProbVector, LearnerError> {
    if t == 0 {
        return Err(LearnerError::ZeroRound);
    }
    if losses.is_empty() {
        return Err(LearnerError::NoArms);
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(LearnerError::NonFiniteLoss);
    }
    let k = losses.len() as f64;
    let eta = tsallis_learning_rate(t);
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    // Work relative to the smallest loss; the normalizer absorbs the shift.
    let gaps: Vec<f64> = losses.iter().map(|l| l - min).collect();
    let weight = |y: f64| -> (f64, f64) {
        let mut g = -1.0;
        let mut dg = 0.0;
        for &d in &gaps {
            let z = eta * (d - y);
            let p = 4.0 / (z * z);
            g += p;
            dg += 2.0 * p / (d - y);
        }
        (g, dg)
    };

    let mut lo = -2.0 * k / eta;
    let mut hi = -2.0 / eta;
    let mut y = -2.0 * k.sqrt() / eta;
    let mut residual = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let (g, dg) = weight(y);
        residual = g;
        if g.abs() <= NEWTON_TOLERANCE {
            let mut p: Vec<f64> = gaps
                .iter()
                .map(|&d| {
                    let z = eta * (d - y);
                    4.0 / (z * z)
                })
                .collect();
            let sum: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= sum);
            return Ok(ProbVector(p));
        }
        if g < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let step = y - g / dg;
        y = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
    }
    Err(LearnerError::NoConvergence { iterations: NEWTON_MAX_ITER, residual })
}

/// Exponential weights `p_k ∝ exp(−η L̂_k)`.
pub fn exp3_distribution(losses: &[f64], learning_rate: f64) -> Result<ProbVector, LearnerError> {
    if losses.is_empty() {
        return Err(LearnerError::NoArms);
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(LearnerError::NonFiniteLoss);
    }
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let mut w: Vec<f64> = losses.iter().map(|l| (-learning_rate * (l - min)).exp()).collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    Ok(ProbVector(w))
}

/// Default Exp3 learning rate `√(2 ln K / (K T))` for a known horizon.
pub fn exp3_default_learning_rate(k: usize, horizon: u64) -> f64 {
    (2.0 * (k as f64).ln() / (k as f64 * horizon as f64)).sqrt()
}

/// Importance-weighted loss estimate: `loss / p(chosen)` at `chosen`, zero
/// elsewhere.
pub fn iw_estimate(chosen: usize, p: &ProbVector, loss: f64) -> Result<Vec<f64>, LearnerError> {
    if chosen >= p.len() {
        return Err(LearnerError::ArmOutOfRange { index: chosen, k: p.len() });
    }
    let pc = p.get(chosen);
    if pc <= 0.0 {
        return Err(LearnerError::ZeroProbabilityChosen(chosen));
    }
    let mut est = vec![0.0; p.len()];
    est[chosen] = loss / pc;
    Ok(est)
}

/// A bandit learner usable as a black box by the dueling reduction.
pub trait MabLearner {
    fn num_arms(&self) -> usize;

    /// Index of the round the next selection belongs to (starts at 1).
    fn round(&self) -> u64;

    /// Sampling distribution for the current round.
    fn distribution(&self) -> Result<ProbVector, LearnerError>;

    /// Feeds the loss of the arm drawn from `p` and advances one round.
    fn update(&mut self, chosen: usize, loss: f64, p: &ProbVector) -> Result<(), LearnerError>;

    fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, ProbVector), LearnerError> {
        let p = self.distribution()?;
        Ok((p.sample(rng), p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearnerKind {
    TsallisInf,
    Exp3 { learning_rate: f64 },
}

/// Cumulative-loss state shared by both learners.
#[derive(Debug, Clone, PartialEq)]
pub struct MabLearnerState {
    kind: LearnerKind,
    round: u64,
    cumulative: Vec<f64>,
}

impl MabLearnerState {
    pub fn new(kind: LearnerKind, k: usize) -> Self {
        Self { kind, round: 1, cumulative: vec![0.0; k] }
    }

    pub fn tsallis_inf(k: usize) -> Self {
        Self::new(LearnerKind::TsallisInf, k)
    }

    pub fn exp3(k: usize, horizon: u64) -> Self {
        Self::new(LearnerKind::Exp3 { learning_rate: exp3_default_learning_rate(k, horizon) }, k)
    }

    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    /// Cumulative loss estimates `L̂`.
    pub fn cumulative_losses(&self) -> &[f64] {
        &self.cumulative
    }

    /// Adds an arbitrary nonnegative estimate vector and advances one round.
    pub fn apply_estimate(&mut self, estimate: &[f64]) -> Result<(), LearnerError> {
        if estimate.len() != self.cumulative.len() {
            return Err(LearnerError::ArmOutOfRange {
                index: estimate.len(),
                k: self.cumulative.len(),
            });
        }
        if estimate.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(LearnerError::NonFiniteLoss);
        }
        for (acc, e) in self.cumulative.iter_mut().zip(estimate) {
            *acc += e;
        }
        self.round += 1;
        Ok(())
    }
}

impl MabLearner for MabLearnerState {
    fn num_arms(&self) -> usize {
        self.cumulative.len()
    }

    fn round(&self) -> u64 {
        self.round
    }

    fn distribution(&self) -> Result<ProbVector, LearnerError> {
        match self.kind {
            LearnerKind::TsallisInf => tsallis_distribution(&self.cumulative, self.round),
            LearnerKind::Exp3 { learning_rate } => {
                exp3_distribution(&self.cumulative, learning_rate)
            }
        }
    }

    fn update(&mut self, chosen: usize, loss: f64, p: &ProbVector) -> Result<(), LearnerError> {
        if !(0.0..=1.0).contains(&loss) {
            return Err(LearnerError::LossOutOfRange(loss));
        }
        if chosen >= self.cumulative.len() {
            return Err(LearnerError::ArmOutOfRange { index: chosen, k: self.cumulative.len() });
        }
        let pc = p.get(chosen);
        if pc <= 0.0 {
            return Err(LearnerError::ZeroProbabilityChosen(chosen));
        }
        self.cumulative[chosen] += loss / pc;
        self.round += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn zero_losses_give_uniform() {
        for t in [1, 7, 1000] {
            let p = tsallis_distribution(&[0.0; 4], t).unwrap();
            assert_close(p.as_slice(), &[0.25; 4], 1e-12);
        }
        let p = exp3_distribution(&[0.0; 3], 0.3).unwrap();
        assert_close(p.as_slice(), &[1.0 / 3.0; 3], 1e-15);
    }

    #[test]
    fn two_arm_reference_value() {
        // frozen from an SLSQP minimization of <p, L> - sqrt(t) * sum sqrt(p)
        let p = tsallis_distribution(&[0.0, 1.0], 1).unwrap();
        assert_close(p.as_slice(), &[0.893075688879, 0.106924311121], 1e-7);
    }

    #[test]
    fn three_arm_reference_value() {
        let p = tsallis_distribution(&[0.0, 10.0, 10.0], 100).unwrap();
        assert!((p.get(0) - 0.794767841667).abs() < 1e-7, "{p:?}");
        assert!((p.get(1) - p.get(2)).abs() < 1e-15);
    }

    #[test]
    fn shift_invariance() {
        let base = [0.3, 2.0, 7.5, 0.0];
        let p = tsallis_distribution(&base, 17).unwrap();
        for c in [1.0, 123.456, 1e5] {
            let shifted: Vec<f64> = base.iter().map(|l| l + c).collect();
            let q = tsallis_distribution(&shifted, 17).unwrap();
            assert_close(p.as_slice(), q.as_slice(), 1e-12);
        }
    }

    #[test]
    fn extreme_losses_still_converge() {
        let p = tsallis_distribution(&[0.0, 1e9, 5e12, 3.0], 2).unwrap();
        assert!(p.as_slice().iter().all(|&v| v > 0.0));
        let q = tsallis_distribution(&[1e8, 1e8 + 1.0], 100_000).unwrap();
        assert!((q.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(tsallis_distribution(&[0.0], 0).unwrap_err(), LearnerError::ZeroRound);
        assert_eq!(
            tsallis_distribution(&[0.0, f64::NAN], 1).unwrap_err(),
            LearnerError::NonFiniteLoss
        );
    }

    #[test]
    fn fresh_learners_are_uniform_and_deterministic() {
        for learner in [MabLearnerState::tsallis_inf(5), MabLearnerState::exp3(5, 1000)] {
            let p = learner.distribution().unwrap();
            assert_close(p.as_slice(), &[0.2; 5], 1e-12);
            let a = learner.select(&mut ChaCha20Rng::seed_from_u64(4)).unwrap();
            let b = learner.select(&mut ChaCha20Rng::seed_from_u64(4)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn iw_estimate_examples() {
        let p = ProbVector::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(iw_estimate(0, &p, 1.0).unwrap(), vec![4.0, 0.0]);
        assert_eq!(iw_estimate(1, &p, 0.0).unwrap(), vec![0.0, 0.0]);
        let degenerate = ProbVector::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(
            iw_estimate(1, &degenerate, 1.0).unwrap_err(),
            LearnerError::ZeroProbabilityChosen(1)
        );
    }

    #[test]
    fn iw_estimate_is_unbiased_by_enumeration() {
        let p = ProbVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let losses = [0.9, 0.0, 0.5, 1.0];
        let mut expectation = [0.0; 4];
        for a in 0..4 {
            let est = iw_estimate(a, &p, losses[a]).unwrap();
            for k in 0..4 {
                expectation[k] += p.get(a) * est[k];
            }
        }
        assert_close(&expectation, &losses, 1e-12);
    }

    #[test]
    fn update_bookkeeping() {
        let mut s = MabLearnerState::tsallis_inf(3);
        let p = ProbVector::new(vec![0.5, 0.25, 0.25]).unwrap();
        s.update(1, 0.0, &p).unwrap();
        assert_eq!(s.cumulative_losses(), &[0.0; 3]);
        assert_eq!(s.round(), 2);

        let mut expected_total = 0.0;
        let plays = [(0, 1.0), (2, 0.5), (1, 1.0), (0, 0.5), (2, 1.0)];
        for &(arm, loss) in &plays {
            let before = s.cumulative_losses().to_vec();
            s.update(arm, loss, &p).unwrap();
            expected_total += loss / p.get(arm);
            for k in 0..3 {
                if k != arm {
                    assert_eq!(s.cumulative_losses()[k], before[k]);
                }
            }
        }
        let total: f64 = s.cumulative_losses().iter().sum();
        assert!((total - expected_total).abs() < 1e-12);
        assert_eq!(s.round(), 2 + plays.len() as u64);
        assert_eq!(s.update(0, 1.5, &p).unwrap_err(), LearnerError::LossOutOfRange(1.5));
    }

    #[test]
    fn updates_on_different_arms_commute() {
        let p = ProbVector::new(vec![0.2, 0.8]).unwrap();
        let mut a = MabLearnerState::tsallis_inf(2);
        let mut b = a.clone();
        a.update(0, 1.0, &p).unwrap();
        a.update(1, 0.5, &p).unwrap();
        b.update(1, 0.5, &p).unwrap();
        b.update(0, 1.0, &p).unwrap();
        assert_eq!(a.cumulative_losses(), b.cumulative_losses());
    }

    #[test]
    fn exp3_prefers_lower_loss() {
        let p = exp3_distribution(&[0.0, 10.0], 0.1).unwrap();
        let expected = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((p.get(0) - expected).abs() < 1e-15);
        assert!((exp3_default_learning_rate(10, 1000) - (2.0 * 10f64.ln() / 10_000.0).sqrt()).abs() < 1e-18);
    }

    #[test]
    fn sampling_frequencies_track_distribution() {
        let p = ProbVector::new(vec![0.1, 0.6, 0.3]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut counts = [0usize; 3];
        for _ in 0..60_000 {
            counts[p.sample(&mut rng)] += 1;
        }
        for k in 0..3 {
            assert!((counts[k] as f64 / 60_000.0 - p.get(k)).abs() < 0.01);
        }
    }

    proptest! {
        #[test]
        fn tsallis_output_is_positive_monotone_distribution(
            losses in proptest::collection::vec(0.0f64..50.0, 2..8),
            t in 1u64..100_000,
        ) {
            let p = tsallis_distribution(&losses, t).unwrap();
            let sum: f64 = p.as_slice().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            for a in 0..losses.len() {
                prop_assert!(p.get(a) > 0.0 && p.get(a) <= 1.0);
                for b in 0..losses.len() {
                    if losses[a] < losses[b] {
                        prop_assert!(p.get(a) > p.get(b));
                    }
                }
            }
        }
    }
}
