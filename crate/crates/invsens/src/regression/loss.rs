//! The alpha-insensitive robust loss family.

use nalgebra::{DMatrix, DVector};

use super::RegressionDataset;
use crate::error::{Error, Result};

/// Smoothed absolute loss `h_a(t) = a ln(1 + e^{t/a}) + a ln(1 + e^{-t/a})`.
///
/// Behaves like `|t|` outside an `O(alpha)` neighborhood of zero and is
/// smooth inside it: convex, symmetric, 1-Lipschitz, with curvature bounded
/// by `1/(2 alpha)` (attained at 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustLoss {
    alpha: f64,
}

impl RobustLoss {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::param(format!("alpha must be positive, got {alpha}")));
        }
        Ok(RobustLoss { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Loss value. Rewritten as `|t| + 2a ln(1 + e^{-|t|/a})`, which is
    /// algebraically identical but never exponentiates a positive argument,
    /// so it cannot overflow for any `t / alpha`.
    pub fn h(&self, t: f64) -> f64 {
        let z = t.abs() / self.alpha;
        t.abs() + 2.0 * self.alpha * (-z).exp().ln_1p()
    }

    /// Derivative `h'(t) = tanh(t / (2 alpha))`, so `|h'| < 1` everywhere.
    pub fn dh(&self, t: f64) -> f64 {
        (t / (2.0 * self.alpha)).tanh()
    }

    /// Second derivative `h''(t) = (1 - tanh^2(t/(2a))) / (2a)`.
    pub fn d2h(&self, t: f64) -> f64 {
        let th = (t / (2.0 * self.alpha)).tanh();
        (1.0 - th * th) / (2.0 * self.alpha)
    }
}

/// Empirical risk of the linear model under `loss`:
/// `L_n(theta) = (1/n) sum_i h(<theta, x_i> - y_i)`,
/// with its exact gradient and Hessian.
pub fn loss_eval(
    loss: &RobustLoss,
    theta: &DVector<f64>,
    dataset: &RegressionDataset,
) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
    let d = dataset.dim();
    if theta.len() != d {
        return Err(Error::param(format!(
            "theta has dimension {}, dataset has {d}",
            theta.len()
        )));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("theta must be finite"));
    }
    let n = dataset.n() as f64;
    let mut value = 0.0;
    let mut grad = DVector::zeros(d);
    let mut hess = DMatrix::zeros(d, d);
    for (x, y) in dataset.rows() {
        let r = theta.dot(x) - y;
        value += loss.h(r);
        grad.axpy(loss.dh(r), x, 1.0);
        hess.ger(loss.d2h(r), x, x, 1.0);
    }
    Ok((value / n, grad / n, hess / n))
}
