//! Inverse-sensitivity lengths on finite problems, exhaustive oracles, and
//! the discrete mechanism.
//!
//! The length of a target `t` at dataset `x` is the minimal number of records
//! that must change before the estimand equals `t`:
//!
//! ```text
//! len(x; t) = min { d_ham(x, x') : f(x') = t }
//! ```
//!
//! On a finite data domain this is computable exactly by searching Hamming
//! balls of growing radius. These oracles are deliberately brute force: they
//! exist to validate the closed-form lengths used by the fast mechanisms and
//! to drive the privacy audits, so they must be trivially correct rather than
//! fast.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mechanisms::{exponential_probabilities, sample_categorical};

/// Hard cap on `|alphabet|^n` for exhaustive problems.
///
/// Everything in this module (and the audits built on it) enumerates the full
/// data domain in the worst case; the cap keeps that a conscious choice.
pub const ENUMERATION_CAP: u128 = 100_000;

/// A finite data domain with an estimand, small enough to enumerate.
#[derive(Clone)]
pub struct FiniteProblem {
    alphabet: Vec<f64>,
    n: usize,
    estimand: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    target_grid: Vec<f64>,
}

impl std::fmt::Debug for FiniteProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiniteProblem")
            .field("alphabet", &self.alphabet)
            .field("n", &self.n)
            .field("target_grid", &self.target_grid)
            .finish_non_exhaustive()
    }
}

impl FiniteProblem {
    pub fn new(
        alphabet: Vec<f64>,
        n: usize,
        estimand: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        target_grid: Vec<f64>,
    ) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::EmptyInput("alphabet"));
        }
        if n == 0 {
            return Err(Error::param("dataset size n must be at least 1"));
        }
        if alphabet.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("alphabet values must be finite"));
        }
        let size = (alphabet.len() as u128)
            .checked_pow(n as u32)
            .unwrap_or(u128::MAX);
        if size > ENUMERATION_CAP {
            return Err(Error::EnumerationCap { size, cap: ENUMERATION_CAP });
        }
        Ok(FiniteProblem { alphabet, n, estimand, target_grid })
    }

    pub fn alphabet(&self) -> &[f64] {
        &self.alphabet
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn target_grid(&self) -> &[f64] {
        &self.target_grid
    }

    pub fn domain_size(&self) -> u128 {
        (self.alphabet.len() as u128).pow(self.n as u32)
    }

    pub fn estimand(&self, dataset: &[f64]) -> f64 {
        (self.estimand)(dataset)
    }

    pub fn contains(&self, dataset: &[f64]) -> bool {
        dataset.len() == self.n && dataset.iter().all(|v| self.alphabet.contains(v))
    }

    /// Iterate over every dataset in `alphabet^n` (odometer order).
    pub fn datasets(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        DatasetIter { alphabet: &self.alphabet, digits: vec![0; self.n], done: false }
    }

    fn require_member(&self, dataset: &[f64]) -> Result<()> {
        if !self.contains(dataset) {
            return Err(Error::param("dataset is not a member of alphabet^n"));
        }
        Ok(())
    }
}

struct DatasetIter<'a> {
    alphabet: &'a [f64],
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for DatasetIter<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.done {
            return None;
        }
        let out: Vec<f64> = self.digits.iter().map(|&i| self.alphabet[i]).collect();
        // increment the odometer
        let mut pos = 0;
        loop {
            if pos == self.digits.len() {
                self.done = true;
                break;
            }
            self.digits[pos] += 1;
            if self.digits[pos] < self.alphabet.len() {
                break;
            }
            self.digits[pos] = 0;
            pos += 1;
        }
        Some(out)
    }
}

/// Exact inverse sensitivity by breadth-first search over Hamming balls.
///
/// Returns the minimal number of substitutions after which the estimand lies
/// within `tol` of `target`, or `None` if no dataset in the domain attains it.
pub fn inverse_sensitivity_bruteforce(
    problem: &FiniteProblem,
    dataset: &[f64],
    target: f64,
    tol: f64,
) -> Result<Option<u32>> {
    problem.require_member(dataset)?;
    if !(tol >= 0.0) {
        return Err(Error::param(format!("tol must be nonnegative, got {tol}")));
    }
    let hit = |d: &[f64]| (problem.estimand(d) - target).abs() <= tol;
    if hit(dataset) {
        return Ok(Some(0));
    }
    let mut scratch = dataset.to_vec();
    for k in 1..=problem.n {
        if exists_at_distance(problem, dataset, &mut scratch, &hit, 0, k) {
            return Ok(Some(k as u32));
        }
    }
    Ok(None)
}

/// Does any dataset at Hamming distance exactly `remaining` from `original`
/// (changing positions at index >= `start` only) satisfy `hit`?
fn exists_at_distance(
    problem: &FiniteProblem,
    original: &[f64],
    scratch: &mut Vec<f64>,
    hit: &impl Fn(&[f64]) -> bool,
    start: usize,
    remaining: usize,
) -> bool {
    if remaining == 0 {
        return hit(scratch);
    }
    if start + remaining > original.len() {
        return false;
    }
    for i in start..=original.len() - remaining {
        for &v in &problem.alphabet {
            if v == original[i] {
                continue;
            }
            scratch[i] = v;
            if exists_at_distance(problem, original, scratch, hit, i + 1, remaining - 1) {
                scratch[i] = original[i];
                return true;
            }
        }
        scratch[i] = original[i];
    }
    false
}

/// Lengths for every target on the problem's grid, via the brute-force oracle.
pub fn length_profile(
    problem: &FiniteProblem,
    dataset: &[f64],
    tol: f64,
) -> Result<Vec<Option<u32>>> {
    problem
        .target_grid
        .iter()
        .map(|&t| inverse_sensitivity_bruteforce(problem, dataset, t, tol))
        .collect()
}

/// Smoothed length: the minimum of `len_fn` over the closed ball of radius
/// `rho` around `target`.
///
/// The target itself is always probed, so `rho = 0` returns `len_fn(target)`.
/// For piecewise-constant length functions the probe grid should contain the
/// breakpoints; the minimum over ball-intersected probes is then exact.
pub fn smooth_inverse_sensitivity(
    len_fn: impl Fn(f64) -> Option<u32>,
    target: f64,
    rho: f64,
    probe_grid: &[f64],
) -> Result<Option<u32>> {
    if !(rho >= 0.0) {
        return Err(Error::param(format!("rho must be nonnegative, got {rho}")));
    }
    if probe_grid.is_empty() {
        return Err(Error::EmptyInput("probe_grid"));
    }
    let mut best = len_fn(target);
    for &s in probe_grid {
        if (s - target).abs() <= rho {
            best = match (best, len_fn(s)) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
        }
    }
    Ok(best)
}

/// Local modulus of continuity: max |f(x') - f(x)| over d_ham(x, x') <= k.
pub fn modulus_bruteforce(problem: &FiniteProblem, dataset: &[f64], k: u32) -> Result<f64> {
    problem.require_member(dataset)?;
    if k as usize > problem.n {
        return Err(Error::param(format!("k = {k} exceeds dataset size {}", problem.n)));
    }
    let fx = problem.estimand(dataset);
    let mut worst = 0.0f64;
    let mut scratch = dataset.to_vec();
    for dist in 1..=k as usize {
        max_at_distance(problem, dataset, &mut scratch, fx, 0, dist, &mut worst);
    }
    Ok(worst)
}

fn max_at_distance(
    problem: &FiniteProblem,
    original: &[f64],
    scratch: &mut Vec<f64>,
    fx: f64,
    start: usize,
    remaining: usize,
    worst: &mut f64,
) {
    if remaining == 0 {
        *worst = worst.max((problem.estimand(scratch) - fx).abs());
        return;
    }
    if start + remaining > original.len() {
        return;
    }
    for i in start..=original.len() - remaining {
        for &v in &problem.alphabet {
            if v == original[i] {
                continue;
            }
            scratch[i] = v;
            max_at_distance(problem, original, scratch, fx, i + 1, remaining - 1, worst);
        }
        scratch[i] = original[i];
    }
}

/// Normalized selection probabilities of the discrete mechanism.
///
/// Unreachable targets (`None`) get exactly zero mass and are excluded from
/// the normalization.
pub fn discrete_probabilities(lengths: &[Option<u32>], epsilon: f64) -> Result<Vec<f64>> {
    let scores: Vec<f64> = lengths
        .iter()
        .map(|l| l.map_or(f64::INFINITY, f64::from))
        .collect();
    exponential_probabilities(&scores, epsilon)
}

/// The discrete inverse-sensitivity mechanism.
///
/// Samples a target with probability proportional to
/// `exp(-len * epsilon / 2)`. The caller supplies the per-target lengths;
/// the true answer `f(x)` must be among them with length 0. Because length
/// is 1-Lipschitz in the dataset, the selection is `epsilon`-DP (and
/// `epsilon/2`-DP when the estimand is binary).
pub fn discrete_mechanism<T: Clone, R: Rng + ?Sized>(
    lengths: &[(T, Option<u32>)],
    epsilon: f64,
    rng: &mut R,
) -> Result<T> {
    let lens: Vec<Option<u32>> = lengths.iter().map(|(_, l)| *l).collect();
    let probs = discrete_probabilities(&lens, epsilon)?;
    Ok(lengths[sample_categorical(&probs, rng)].0.clone())
}

/// Exact probability that the discrete mechanism returns the true answer:
/// `1 / sum_t exp(-len(x; t) * epsilon / 2)`.
///
/// The lengths must include the true answer (length 0); unreachable targets
/// contribute nothing to the sum.
pub fn prob_correct(lengths: &[Option<u32>], epsilon: f64) -> f64 {
    debug_assert!(!lengths.is_empty());
    let z: f64 = lengths
        .iter()
        .filter_map(|l| l.map(|k| (-f64::from(k) * epsilon / 2.0).exp()))
        .sum();
    1.0 / z
}

/// Is the length function nondecreasing as targets move away from `f(x)`?
///
/// Checks the grid points at or above `f(x)` left to right, and those at or
/// below `f(x)` right to left; unreachable counts as infinite.
pub fn check_sample_monotone(
    problem: &FiniteProblem,
    dataset: &[f64],
    target_grid: &[f64],
    tol: f64,
) -> Result<bool> {
    let fx = problem.estimand(dataset);
    let mut grid = target_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let len_of = |t: f64| -> Result<u64> {
        Ok(inverse_sensitivity_bruteforce(problem, dataset, t, tol)?
            .map_or(u64::MAX, u64::from))
    };
    let mut prev = 0u64;
    for &t in grid.iter().filter(|&&t| t >= fx) {
        let l = len_of(t)?;
        if l < prev {
            return Ok(false);
        }
        prev = l;
    }
    prev = 0;
    for &t in grid.iter().rev().filter(|&&t| t <= fx) {
        let l = len_of(t)?;
        if l < prev {
            return Ok(false);
        }
        prev = l;
    }
    Ok(true)
}
