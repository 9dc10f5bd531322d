//! ERM solving and the user-addition inverse-sensitivity length.

use nalgebra::{DMatrix, DVector};

use super::loss::{loss_eval, RobustLoss};
use super::{ParamDomain, RegressionDataset};
use crate::error::{Error, Result};

const MAX_NEWTON_ITERS: usize = 200;

/// Solution of the constrained empirical-risk minimization.
#[derive(Debug, Clone)]
pub struct ErmSolution {
    pub theta: DVector<f64>,
    /// Norm of the (unprojected) gradient at `theta`.
    pub grad_norm: f64,
    pub hessian: DMatrix<f64>,
    /// Smallest eigenvalue of the Hessian at `theta`.
    pub lambda_min: f64,
    /// False when the minimizer sits on the domain boundary. Interiority is
    /// required by the release mechanism's utility analysis, so callers must
    /// check this flag rather than trust `grad_norm` alone.
    pub interior: bool,
}

/// Damped projected Newton with Armijo backtracking.
///
/// Converges when the gradient norm drops below `tol` at an interior point,
/// or stalls at the boundary (returned with `interior = false`).
pub fn solve_erm(
    loss: &RobustLoss,
    dataset: &RegressionDataset,
    domain: &ParamDomain,
    tol: f64,
) -> Result<ErmSolution> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::param(format!("tol must be positive, got {tol}")));
    }
    if domain.dim() != dataset.dim() {
        return Err(Error::param("domain and dataset dimensions differ"));
    }
    let mut theta = domain.center();
    let mut evaluated = loss_eval(loss, &theta, dataset)?;
    for _ in 0..MAX_NEWTON_ITERS {
        let (value, grad, hess) = &evaluated;
        if grad.norm() <= tol {
            return Ok(finish(theta, &evaluated, domain, true));
        }
        let dir = newton_direction(hess, grad)?;
        // Armijo backtracking along the projected path
        let mut step = 1.0;
        let mut moved = false;
        while step >= 1e-14 {
            let trial = domain.project(&(&theta + &dir * step));
            let shift = &trial - &theta;
            let slope = grad.dot(&shift);
            if slope < 0.0 {
                let trial_eval = loss_eval(loss, &trial, dataset)?;
                if trial_eval.0 <= value + 1e-4 * slope {
                    theta = trial;
                    evaluated = trial_eval;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            // projection blocks every descent direction: boundary optimum
            return Ok(finish(theta, &evaluated, domain, false));
        }
    }
    Err(Error::NoConvergence(MAX_NEWTON_ITERS))
}

fn finish(
    theta: DVector<f64>,
    (_, grad, hess): &(f64, DVector<f64>, DMatrix<f64>),
    domain: &ParamDomain,
    descent_finished: bool,
) -> ErmSolution {
    let lambda_min = hess
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let interior = descent_finished && is_strictly_interior(domain, &theta);
    ErmSolution {
        grad_norm: grad.norm(),
        hessian: hess.clone(),
        lambda_min,
        interior,
        theta,
    }
}

fn is_strictly_interior(domain: &ParamDomain, theta: &DVector<f64>) -> bool {
    match domain {
        ParamDomain::Ball { center, radius } => {
            (theta - center).norm() < radius * (1.0 - 1e-9)
        }
        ParamDomain::Box { low, high } => theta
            .iter()
            .zip(low.iter().zip(high.iter()))
            .all(|(t, (l, h))| {
                let margin = 1e-9 * (h - l);
                *t > l + margin && *t < h - margin
            }),
    }
}

/// Newton direction with a ridge escalated until the Hessian factorizes.
fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Result<DVector<f64>> {
    let d = hess.nrows();
    let scale = hess.trace().abs() / d as f64 + 1.0;
    let mut ridge = 0.0;
    loop {
        let reg = hess + DMatrix::identity(d, d) * ridge;
        if let Some(chol) = reg.cholesky() {
            return Ok(-chol.solve(grad));
        }
        ridge = if ridge == 0.0 { 1e-10 * scale } else { ridge * 10.0 };
        if ridge > 1e6 * scale {
            return Err(Error::Singular("hessian could not be regularized"));
        }
    }
}

/// User-addition inverse sensitivity of a parameter value:
/// `ceil(n ||grad L_n(theta)|| / Bx)`.
///
/// Each added row shifts the *summed* gradient by at most `Bx` (the loss is
/// 1-Lipschitz and `||x|| <= Bx`), and rows can be constructed that realize
/// any shift below that, so this ceiling is exactly the number of users whose
/// addition makes `theta` the ERM. A tiny slack inside the ceiling keeps
/// exact-integer boundary cases from rounding up spuriously.
pub fn user_addition_len(
    dataset: &RegressionDataset,
    theta: &DVector<f64>,
    loss: &RobustLoss,
) -> Result<u32> {
    let (_, grad, _) = loss_eval(loss, theta, dataset)?;
    let value = dataset.n() as f64 * grad.norm() / dataset.bx();
    Ok((value - 1e-9).ceil().max(0.0) as u32)
}

/// Unnormalized log-density of the inverse-sensitivity release:
/// `-(epsilon/2) * user_addition_len(theta)` inside the domain, `-inf`
/// outside.
pub fn target_log_density(
    dataset: &RegressionDataset,
    theta: &DVector<f64>,
    epsilon: f64,
    loss: &RobustLoss,
    domain: &ParamDomain,
) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
    }
    if !domain.contains(theta) {
        return Ok(f64::NEG_INFINITY);
    }
    let len = user_addition_len(dataset, theta, loss)?;
    Ok(-epsilon / 2.0 * f64::from(len))
}
