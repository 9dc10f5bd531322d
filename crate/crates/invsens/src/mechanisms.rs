//! Baseline additive-noise mechanisms and the finite exponential mechanism.

use rand::Rng;

use crate::error::{Error, Result};
use crate::noise::sample_laplace;

/// Classical Laplace mechanism: `value + (GS/epsilon) * Lap(1)`.
///
/// Gives pure `epsilon`-DP when `global_sensitivity` bounds the worst-case
/// change of the estimand between neighboring datasets. A zero sensitivity is
/// legal and returns the value exactly.
pub fn laplace_mechanism<R: Rng + ?Sized>(
    value: f64,
    global_sensitivity: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<f64> {
    check_scale_params(global_sensitivity, epsilon, "global_sensitivity")?;
    Ok(value + global_sensitivity / epsilon * sample_laplace(rng))
}

/// Smooth-sensitivity Laplace mechanism: `value + (2 * S(x) / epsilon) * Lap(1)`.
///
/// `smooth_bound` must be a beta-smooth upper bound on local sensitivity with
/// `beta = epsilon / (2 ln(2/delta))`; producing such a bound is the caller's
/// job (see the median module). The guarantee is then `(epsilon, delta)`-DP.
pub fn smooth_laplace_mechanism<R: Rng + ?Sized>(
    value: f64,
    smooth_bound: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<f64> {
    check_scale_params(smooth_bound, epsilon, "smooth_bound")?;
    Ok(value + 2.0 * smooth_bound / epsilon * sample_laplace(rng))
}

fn check_scale_params(sensitivity: f64, epsilon: f64, name: &str) -> Result<()> {
    if !sensitivity.is_finite() || sensitivity < 0.0 {
        return Err(Error::param(format!("{name} must be finite and >= 0, got {sensitivity}")));
    }
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// Normalized selection probabilities `P(i) ∝ exp(-scores[i] * epsilon / 2)`.
///
/// Scores play the role of distances from the true answer: lower is likelier.
/// The minimum score is subtracted before exponentiation so the largest weight
/// is exactly 1 regardless of scale, which keeps the normalization stable for
/// scores in the hundreds. A score of `+inf` marks an unreachable candidate
/// and gets exactly zero mass.
pub fn exponential_probabilities(scores: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("scores"));
    }
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut min = f64::INFINITY;
    for &s in scores {
        if s.is_nan() || s < 0.0 {
            return Err(Error::param(format!("scores must be nonnegative, got {s}")));
        }
        min = min.min(s);
    }
    if min.is_infinite() {
        return Err(Error::ZeroMass);
    }
    let weights: Vec<f64> = scores.iter().map(|&s| (-(s - min) * epsilon / 2.0).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Exponential mechanism over an explicit finite candidate set.
///
/// Each candidate carries a nonnegative score; selection probability is
/// proportional to `exp(-score * epsilon / 2)`. With scores that are
/// 1-Lipschitz in the dataset (change by at most 1 between neighbors), the
/// selection is `epsilon`-DP.
pub fn exponential_mechanism_finite<T: Clone, R: Rng + ?Sized>(
    scored: &[(T, f64)],
    epsilon: f64,
    rng: &mut R,
) -> Result<T> {
    let scores: Vec<f64> = scored.iter().map(|(_, s)| *s).collect();
    let probs = exponential_probabilities(&scores, epsilon)?;
    let idx = sample_categorical(&probs, rng);
    Ok(scored[idx].0.clone())
}

/// Sample an index from an explicit probability vector by CDF inversion.
///
/// Assumes `probs` sums to ~1; the final index absorbs any rounding slack.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    debug_assert!(!probs.is_empty());
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}
