//! Privacy budget and neighboring-dataset conventions.

use crate::error::{Error, Result};

/// Which datasets count as neighbors of `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborMode {
    /// Same size `n`, differing in at most one record (Hamming distance 1).
    Substitution,
    /// `x'` extends `x` by one extra record; used by the regression release.
    UserAddition,
}

/// Differential-privacy budget `(epsilon, delta)` plus the neighbor relation
/// it is stated against.
///
/// `delta = 0` denotes pure DP; mechanisms that only give approximate
/// guarantees (smooth-sensitivity noise, private SGD) require `delta > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
    pub neighbor_mode: NeighborMode,
}

impl PrivacyBudget {
    /// Pure `epsilon`-DP under substitution neighbors.
    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0, NeighborMode::Substitution)
    }

    /// `(epsilon, delta)`-DP under substitution neighbors.
    pub fn approx(epsilon: f64, delta: f64) -> Result<Self> {
        Self::new(epsilon, delta, NeighborMode::Substitution)
    }

    pub fn new(epsilon: f64, delta: f64, neighbor_mode: NeighborMode) -> Result<Self> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
        }
        if !delta.is_finite() || delta < 0.0 || delta >= 1.0 {
            return Err(Error::param(format!("delta must lie in [0, 1), got {delta}")));
        }
        Ok(PrivacyBudget { epsilon, delta, neighbor_mode })
    }

    pub fn with_neighbor_mode(mut self, mode: NeighborMode) -> Self {
        self.neighbor_mode = mode;
        self
    }

    pub fn is_pure(&self) -> bool {
        self.delta == 0.0
    }
}
