//! Piecewise-constant profile of the one-dimensional regression length.
//!
//! The release target's length `ceil(n |grad L_n(theta)| / B_x)` is constant
//! between gradient thresholds, and the gradient is nondecreasing in theta
//! (the loss is convex), so the whole function over a bounded domain is a
//! finite list of cells. The profile makes density lookups O(log cells) and
//! normalization exact, which the audits and mixing references need; the
//! sweeps themselves evaluate the length directly.

use invsens::error::{Error, Result};
use invsens::regression::{loss_eval, user_addition_len, RegressionDataset, RobustLoss};
use nalgebra::DVector;

pub struct LenProfile {
    /// Strictly ascending; first is the domain's low end, last its high end.
    edges: Vec<f64>,
    /// Length on `[edges[i], edges[i+1])`; the final cell also owns its
    /// right endpoint.
    lens: Vec<u32>,
}

impl LenProfile {
    /// Scan the length function of `dataset` over `[lo, hi]`. One-dimensional
    /// datasets only.
    pub fn build(loss: &RobustLoss, dataset: &RegressionDataset, lo: f64, hi: f64) -> Result<Self> {
        if dataset.dim() != 1 {
            return Err(Error::param("length profiles require a one-dimensional parameter"));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param(format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        let len_at = |t: f64| user_addition_len(dataset, &DVector::from_element(1, t), loss);
        let grad_at = |t: f64| -> Result<f64> {
            let (_, grad, _) = loss_eval(loss, &DVector::from_element(1, t), dataset)?;
            Ok(grad[0])
        };

        // gradient sign change locates the bottom of the V
        let theta_min = if grad_at(lo)? >= 0.0 {
            lo
        } else if grad_at(hi)? <= 0.0 {
            hi
        } else {
            let (mut a, mut b) = (lo, hi);
            while a.next_up() < b {
                let mid = midpoint(a, b);
                if grad_at(mid)? < 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            b
        };

        let len_lo = len_at(lo)?;
        let len_hi = len_at(hi)?;
        let len_min = len_at(theta_min)?;

        // cells as (a, b, len), built left to right
        let mut cells: Vec<(f64, f64, u32)> = Vec::new();
        let mut cursor = lo;
        // left flank: threshold for "drops below k" rises as k falls
        for k in (len_min + 1..=len_lo).rev() {
            let (mut a, mut b) = (cursor.min(theta_min), theta_min);
            if len_at(a)? < k {
                // already below on the whole remaining flank
                cells.push((cursor, a, k));
                cursor = a;
                continue;
            }
            while a.next_up() < b {
                let mid = midpoint(a, b);
                if len_at(mid)? < k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            cells.push((cursor, b, k));
            cursor = b;
        }
        // bottom cell spans the V floor up to the first right threshold
        let mut right_edges = Vec::new();
        for k in len_min + 1..=len_hi {
            let (mut a, mut b) = (theta_min, hi);
            while a.next_up() < b {
                let mid = midpoint(a, b);
                if len_at(mid)? >= k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            right_edges.push(b);
        }
        let first_right = right_edges.first().copied().unwrap_or(hi);
        cells.push((cursor, first_right, len_min));
        for (i, &edge) in right_edges.iter().enumerate() {
            let b = right_edges.get(i + 1).copied().unwrap_or(hi);
            cells.push((edge, b, len_min + 1 + i as u32));
        }

        let mut edges = vec![lo];
        let mut lens = Vec::new();
        for (a, b, len) in cells {
            debug_assert!(a <= b);
            if a < b {
                edges.push(b);
                lens.push(len);
            }
        }
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        debug_assert_eq!(*edges.last().unwrap(), hi);
        Ok(LenProfile { edges, lens })
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn num_cells(&self) -> usize {
        self.lens.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn lens(&self) -> &[u32] {
        &self.lens
    }

    /// Length at `t`; `None` outside the scanned domain.
    pub fn len_at(&self, t: f64) -> Option<u32> {
        if t < self.lo() || t > self.hi() {
            return None;
        }
        let idx = self.edges.partition_point(|e| *e <= t).saturating_sub(1);
        Some(self.lens[idx.min(self.lens.len() - 1)])
    }

    /// Unnormalized mass of each cell under the exponential weighting.
    pub fn cell_masses(&self, epsilon: f64) -> Vec<f64> {
        self.lens
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&len, w)| (w[1] - w[0]) * (-epsilon / 2.0 * f64::from(len)).exp())
            .collect()
    }

    /// Normalized output density of the release at `t`; zero off-domain.
    pub fn density(&self, epsilon: f64, t: f64) -> f64 {
        let total: f64 = self.cell_masses(epsilon).iter().sum();
        match self.len_at(t) {
            Some(len) => (-epsilon / 2.0 * f64::from(len)).exp() / total,
            None => 0.0,
        }
    }

    /// Unnormalized log density, `-inf` off-domain; shaped for use as an MH
    /// target over one-dimensional states.
    pub fn log_density_unnormalized(&self, epsilon: f64, t: f64) -> f64 {
        match self.len_at(t) {
            Some(len) => -epsilon / 2.0 * f64::from(len),
            None => f64::NEG_INFINITY,
        }
    }

    /// Exact normalized mass of each `[query[i], query[i+1])` interval.
    /// Query edges must be ascending and inside the scanned domain.
    pub fn interval_masses(&self, epsilon: f64, query: &[f64]) -> Result<Vec<f64>> {
        if query.len() < 2 || query.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("query edges must be ascending with at least one cell"));
        }
        if query[0] < self.lo() || *query.last().unwrap() > self.hi() {
            return Err(Error::param("query edges leave the scanned domain"));
        }
        let total: f64 = self.cell_masses(epsilon).iter().sum();
        let weight =
            |len: u32| -> f64 { (-epsilon / 2.0 * f64::from(len)).exp() / total };
        let mut out = Vec::with_capacity(query.len() - 1);
        for w in query.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut mass = 0.0;
            let start = self.edges.partition_point(|e| *e <= a).saturating_sub(1);
            for i in start..self.lens.len() {
                let cell_a = self.edges[i].max(a);
                let cell_b = self.edges[i + 1].min(b);
                if cell_a < cell_b {
                    mass += (cell_b - cell_a) * weight(self.lens[i]);
                }
                if self.edges[i + 1] >= b {
                    break;
                }
            }
            out.push(mass);
        }
        Ok(out)
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    (a / 2.0 + b / 2.0).clamp(a.next_up(), b.next_down())
}
