//! Bounded one-dimensional datasets.

use crate::error::{Error, Result};

/// A dataset of `n` reals known to lie in `[lo, hi]`.
///
/// The bounds are part of the data model: estimands such as the median are
/// released over the public range `[lo, hi]`, and neighboring datasets may
/// move any single record anywhere inside it. Values outside the range are
/// clamped on construction, matching the usual preprocessing contract where
/// the range is enforced before any private computation sees the data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset1D {
    values: Vec<f64>,
    sorted: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl Dataset1D {
    pub fn new(values: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::param(format!("invalid range [{lo}, {hi}]")));
        }
        if values.is_empty() {
            return Err(Error::EmptyInput("dataset"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::param("dataset contains NaN"));
        }
        let values: Vec<f64> = values.into_iter().map(|v| v.clamp(lo, hi)).collect();
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Dataset1D { values, sorted, lo, hi })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least one record
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Records in nondecreasing order.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn range_width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Replace the record at `idx` with `value` (clamped), returning a new dataset.
    ///
    /// This is the substitution step used to enumerate neighboring datasets.
    pub fn substitute(&self, idx: usize, value: f64) -> Result<Self> {
        if idx >= self.values.len() {
            return Err(Error::param(format!(
                "substitution index {idx} out of bounds for n = {}",
                self.values.len()
            )));
        }
        let mut values = self.values.clone();
        values[idx] = value;
        Dataset1D::new(values, self.lo, self.hi)
    }
}
