//! Noisy projected-free SGD baseline with a conservative privacy accountant.

use nalgebra::DVector;
use rand::Rng;

use super::loss::RobustLoss;
use super::RegressionDataset;
use crate::error::{Error, Result};
use crate::noise::sample_std_normal;

/// Differentially private SGD: Poisson subsampling at rate `q`, per-example
/// gradients clipped to `clip_bound`, Gaussian noise with standard deviation
/// `sigma * clip_bound` per coordinate added to the gradient sum, stepsize
/// `eta0 / sqrt(t)`. Steps with an empty subsample are skipped.
///
/// For the robust loss the per-example gradient norm is at most `Bx`, so
/// `clip_bound = dataset.bx()` makes clipping a no-op.
#[allow(clippy::too_many_arguments)]
pub fn private_sgd<R: Rng + ?Sized>(
    loss: &RobustLoss,
    dataset: &RegressionDataset,
    sample_rate: f64,
    sigma: f64,
    num_steps: usize,
    eta0: f64,
    clip_bound: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if !(sample_rate > 0.0 && sample_rate <= 1.0) {
        return Err(Error::param(format!("sample_rate must be in (0, 1], got {sample_rate}")));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::param(format!("sigma must be nonnegative, got {sigma}")));
    }
    if !(eta0.is_finite() && eta0 > 0.0) {
        return Err(Error::param(format!("eta0 must be positive, got {eta0}")));
    }
    if !(clip_bound.is_finite() && clip_bound > 0.0) {
        return Err(Error::param(format!("clip_bound must be positive, got {clip_bound}")));
    }
    let d = dataset.dim();
    let mut theta = DVector::zeros(d);
    for t in 1..=num_steps {
        let mut sum = DVector::zeros(d);
        let mut batch = 0usize;
        for (x, y) in dataset.rows() {
            if rng.random::<f64>() >= sample_rate {
                continue;
            }
            batch += 1;
            let grad_scale = loss.dh(theta.dot(x) - y);
            let norm = grad_scale.abs() * x.norm();
            let clip = if norm > clip_bound { clip_bound / norm } else { 1.0 };
            sum.axpy(grad_scale * clip, x, 1.0);
        }
        if batch == 0 {
            continue;
        }
        if sigma > 0.0 {
            for j in 0..d {
                sum[j] += sigma * clip_bound * sample_std_normal(rng);
            }
        }
        let eta = eta0 / (t as f64).sqrt();
        theta.axpy(-eta / batch as f64, &sum, 1.0);
    }
    Ok(theta)
}

/// Conservative (epsilon, delta) accountant for subsampled-Gaussian SGD.
///
/// Per step: the Gaussian mechanism at `delta_0 = delta / (2T)` gives
/// `eps_0 = sqrt(2 ln(1.25/delta_0)) / sigma`, amplified by Poisson
/// subsampling to `eps_step = ln(1 + q (e^{eps_0} - 1))`; steps compose by
/// advanced composition at the remaining `delta / 2`. Deliberately loose
/// compared to moment-based accountants, but a valid upper bound.
pub fn sgd_privacy_accountant(
    sample_rate: f64,
    sigma: f64,
    num_steps: usize,
    delta: f64,
) -> Result<f64> {
    if !(sample_rate > 0.0 && sample_rate <= 1.0) {
        return Err(Error::param(format!("sample_rate must be in (0, 1], got {sample_rate}")));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::param(format!("sigma must be nonnegative, got {sigma}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must be in (0, 1), got {delta}")));
    }
    if num_steps == 0 {
        return Ok(0.0);
    }
    if sigma == 0.0 {
        return Ok(f64::INFINITY);
    }
    let t = num_steps as f64;
    let delta_0 = delta / (2.0 * t);
    let eps_0 = (2.0 * (1.25 / delta_0).ln()).sqrt() / sigma;
    let eps_step = (1.0 + sample_rate * (eps_0.exp() - 1.0)).ln();
    if !eps_step.is_finite() {
        return Ok(f64::INFINITY);
    }
    let advanced = (2.0 * t * (2.0 / delta).ln()).sqrt() * eps_step;
    Ok(advanced + t * eps_step * (eps_step.exp() - 1.0))
}

/// Largest number of steps whose accounted privacy cost stays at or below
/// `epsilon`, or 0 when even a single step exceeds the budget.
pub fn sgd_max_steps(sample_rate: f64, sigma: f64, epsilon: f64, delta: f64) -> Result<usize> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
    }
    if sgd_privacy_accountant(sample_rate, sigma, 1, delta)? > epsilon {
        return Ok(0);
    }
    // exponential growth to bracket, then bisection on the monotone cost
    let mut hi = 1usize;
    while sgd_privacy_accountant(sample_rate, sigma, hi, delta)? <= epsilon {
        match hi.checked_mul(2) {
            Some(next) if next <= 1 << 40 => hi = next,
            _ => return Ok(hi),
        }
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if sgd_privacy_accountant(sample_rate, sigma, mid, delta)? <= epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
