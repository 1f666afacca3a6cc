//! Reference implementations used as oracles. They share no code with the
//! library's solvers.
#![allow(dead_code)]

/// Minimizer of `⟨p, L⟩ − √t · Σ √p_k` over the simplex, by pairwise
/// coordinate descent: each step optimizes the mass split between two
/// coordinates exactly (bisection on the convex one-dimensional derivative).
pub fn tsallis_oracle(losses: &[f64], t: u64) -> Vec<f64> {
    let k = losses.len();
    let c = (t as f64).sqrt();
    let mut p = vec![1.0 / k as f64; k];
    for _sweep in 0..10_000 {
        let mut moved = 0.0f64;
        for i in 0..k {
            for j in (i + 1)..k {
                let s = p[i] + p[j];
                // d/dx of L_i x + L_j (s − x) − c (√x + √(s − x))
                let deriv = |x: f64| losses[i] - losses[j] - c / (2.0 * x.sqrt()) + c / (2.0 * (s - x).sqrt());
                let (mut lo, mut hi) = (0.0, s);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if deriv(mid) > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let x = 0.5 * (lo + hi);
                moved = moved.max((x - p[i]).abs());
                p[i] = x;
                p[j] = s - x;
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    p
}

/// `exp(−η L) / Σ exp(−η L)` evaluated naively.
pub fn softmax_oracle(losses: &[f64], eta: f64) -> Vec<f64> {
    let w: Vec<f64> = losses.iter().map(|l| (-eta * l).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

/// Objective value used to compare candidate minimizers.
pub fn tsallis_objective(p: &[f64], losses: &[f64], t: u64) -> f64 {
    let c = (t as f64).sqrt();
    p.iter().zip(losses).map(|(pk, l)| pk * l - c * pk.sqrt()).sum()
}
