//! Samplers for the regression release: the Gamma-radius heuristic, the
//! capped-exponent proposal, and the independence Metropolis-Hastings chain.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Gamma};
use statrs::function::gamma::{gamma, gamma_lr};

use super::{unit_ball_volume, unit_sphere_surface, ParamDomain};
use crate::error::{Error, Result};
use crate::noise::{sample_gamma_radius, sample_unit_sphere};

const OUTER_REJECTION_CAP: usize = 100_000;

/// Draw from the density proportional to `exp(-(n eps / (2 Bx)) ||H d||)`
/// around `theta_n`, via radius R ~ Gamma(d, 1), uniform direction, and the
/// linear map `H^{-1}`.
///
/// This is the fast approximate release: it ignores the ceiling in the exact
/// length and any domain constraint.
pub fn direct_heuristic_sampler<R: Rng + ?Sized>(
    hessian: &DMatrix<f64>,
    theta_n: &DVector<f64>,
    epsilon: f64,
    bx: f64,
    n: usize,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let d = theta_n.len();
    if hessian.nrows() != d || hessian.ncols() != d {
        return Err(Error::param("hessian dimension does not match theta"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(bx.is_finite() && bx > 0.0) {
        return Err(Error::param(format!("bx must be positive, got {bx}")));
    }
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    let chol = hessian
        .clone()
        .cholesky()
        .ok_or(Error::Singular("heuristic sampler needs a positive-definite hessian"))?;
    let radius = sample_gamma_radius(rng, d);
    let direction = DVector::from_vec(sample_unit_sphere(rng, d));
    let delta = chol.solve(&(direction * radius)) * (2.0 * bx / (n as f64 * epsilon));
    Ok(theta_n + delta)
}

/// The proposal `q(t) ∝ exp(-c min(||H(t - theta_n)||, cap))` restricted to a
/// parameter domain, sampled exactly as a two-component mixture:
///
/// * inner: the ellipsoid `||H(t - theta_n)|| <= cap`, radial density
///   `r^{d-1} e^{-cr}` drawn by inverse CDF of a truncated Gamma;
/// * outer: constant density `e^{-c cap}` on the rest of the domain, drawn
///   by uniform rejection.
///
/// Both component masses are in closed form, so draws are exact (up to the
/// rejection loop, which fails only if the ellipsoid nearly fills the
/// domain).
#[derive(Debug, Clone)]
pub struct BoundedProposal {
    hessian: DMatrix<f64>,
    h_inv: DMatrix<f64>,
    theta_n: DVector<f64>,
    c: f64,
    cap: f64,
    domain: ParamDomain,
    mass_inner: f64,
    mass_outer: f64,
    radial: Gamma,
    radial_cdf_cap: f64,
}

impl BoundedProposal {
    pub fn new(
        hessian: DMatrix<f64>,
        theta_n: DVector<f64>,
        c: f64,
        cap: f64,
        domain: ParamDomain,
    ) -> Result<Self> {
        let d = theta_n.len();
        if hessian.nrows() != d || hessian.ncols() != d {
            return Err(Error::param("hessian dimension does not match theta"));
        }
        if domain.dim() != d {
            return Err(Error::param("domain dimension does not match theta"));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::param(format!("exponent rate c must be positive, got {c}")));
        }
        if !(cap.is_finite() && cap > 0.0) {
            return Err(Error::param(format!("cap must be positive, got {cap}")));
        }
        let chol = hessian
            .clone()
            .cholesky()
            .ok_or(Error::Singular("proposal hessian must be positive definite"))?;
        let det_h = chol.determinant();
        let h_inv = chol.inverse();
        if !domain.contains_ellipsoid(&h_inv, &theta_n, cap) {
            return Err(Error::EllipsoidOutsideDomain { radius: cap });
        }
        let df = d as f64;
        // integral of e^{-c||u||} over the cap-ball, pulled back through H
        let mass_inner =
            unit_sphere_surface(d) * gamma(df) * gamma_lr(df, c * cap) / (c.powi(d as i32) * det_h);
        let ellipsoid_vol = unit_ball_volume(d) * cap.powi(d as i32) / det_h;
        let mass_outer = ((-c * cap).exp() * (domain.volume() - ellipsoid_vol)).max(0.0);
        let radial = Gamma::new(df, c).map_err(|_| Error::param("invalid radial parameters"))?;
        let radial_cdf_cap = radial.cdf(cap);
        Ok(Self {
            hessian,
            h_inv,
            theta_n,
            c,
            cap,
            domain,
            mass_inner,
            mass_outer,
            radial,
            radial_cdf_cap,
        })
    }

    pub fn mass_inner(&self) -> f64 {
        self.mass_inner
    }

    pub fn mass_outer(&self) -> f64 {
        self.mass_outer
    }

    /// Probability the draw comes from the ellipsoid component.
    pub fn p_inner(&self) -> f64 {
        self.mass_inner / (self.mass_inner + self.mass_outer)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let total = self.mass_inner + self.mass_outer;
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::ZeroMass);
        }
        if rng.random_range(0.0..total) < self.mass_inner {
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            let r = self.radial.inverse_cdf(u * self.radial_cdf_cap).min(self.cap);
            let direction = DVector::from_vec(sample_unit_sphere(rng, self.theta_n.len()));
            Ok(&self.theta_n + &self.h_inv * (direction * r))
        } else {
            for _ in 0..OUTER_REJECTION_CAP {
                let t = self.domain.sample_uniform(rng);
                if (&self.hessian * (&t - &self.theta_n)).norm() > self.cap {
                    return Ok(t);
                }
            }
            Err(Error::NoConvergence(OUTER_REJECTION_CAP))
        }
    }

    /// Log of the unnormalized density `-c min(||H(t - theta_n)||, cap)`,
    /// `-inf` outside the domain.
    pub fn log_density_unnormalized(&self, theta: &DVector<f64>) -> f64 {
        if !self.domain.contains(theta) {
            return f64::NEG_INFINITY;
        }
        let r = (&self.hessian * (theta - &self.theta_n)).norm();
        -self.c * r.min(self.cap)
    }

    /// Exactly normalized log-density.
    pub fn log_density(&self, theta: &DVector<f64>) -> f64 {
        self.log_density_unnormalized(theta) - (self.mass_inner + self.mass_outer).ln()
    }
}

/// One draw from the capped-exponent proposal with the release's scaling:
/// rate `c = n eps / (2 Bx)` and cap `r_n Bx` in the `||H(t - theta_n)||`
/// metric.
pub fn sample_proposal_q<R: Rng + ?Sized>(
    hessian: &DMatrix<f64>,
    theta_n: &DVector<f64>,
    epsilon: f64,
    bx: f64,
    n: usize,
    r_n: f64,
    domain: &ParamDomain,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if !(bx.is_finite() && bx > 0.0) {
        return Err(Error::param(format!("bx must be positive, got {bx}")));
    }
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    if !(r_n.is_finite() && r_n > 0.0) {
        return Err(Error::param(format!("r_n must be positive, got {r_n}")));
    }
    let c = n as f64 * epsilon / (2.0 * bx);
    let proposal =
        BoundedProposal::new(hessian.clone(), theta_n.clone(), c, r_n * bx, domain.clone())?;
    proposal.sample(rng)
}

/// Outcome of an independence Metropolis-Hastings run.
#[derive(Debug, Clone)]
pub struct MhRun {
    pub state: DVector<f64>,
    pub accepted: usize,
    pub steps: usize,
}

/// Independence MH: propose fresh draws from a fixed proposal, accept with
/// probability `min(pi(t) q(cur) / (pi(cur) q(t)), 1)`. Densities may be
/// unnormalized; `-inf` marks zero density.
pub fn mh_sampler<R: Rng + ?Sized>(
    target_log_density: impl Fn(&DVector<f64>) -> f64,
    mut proposal_sampler: impl FnMut(&mut R) -> DVector<f64>,
    proposal_log_density: impl Fn(&DVector<f64>) -> f64,
    steps: usize,
    init: DVector<f64>,
    rng: &mut R,
) -> MhRun {
    let mut state = init;
    let mut target_cur = target_log_density(&state);
    let mut proposal_cur = proposal_log_density(&state);
    let mut accepted = 0;
    for _ in 0..steps {
        let candidate = proposal_sampler(rng);
        let target_cand = target_log_density(&candidate);
        if !(target_cand > f64::NEG_INFINITY) {
            continue;
        }
        let take = if !(target_cur > f64::NEG_INFINITY) || !(proposal_cur > f64::NEG_INFINITY) {
            // current state is outside the target or proposal support; any
            // supported candidate is an improvement
            true
        } else {
            let log_ratio =
                (target_cand - target_cur) + (proposal_cur - proposal_log_density(&candidate));
            log_ratio >= 0.0 || rng.random_range(0.0f64..1.0).ln() < log_ratio
        };
        if take {
            proposal_cur = proposal_log_density(&candidate);
            state = candidate;
            target_cur = target_cand;
            accepted += 1;
        }
    }
    MhRun { state, accepted, steps }
}

/// Minimum of q/pi over a uniform grid, both densities normalized by their
/// grid sums (cell volumes cancel). A strictly positive result certifies the
/// geometric-mixing condition for the independence chain on that grid.
pub fn proposal_ratio_check(
    target_log_density: impl Fn(&DVector<f64>) -> f64,
    proposal: &BoundedProposal,
    grid: &[DVector<f64>],
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("ratio-check grid"));
    }
    let target_log: Vec<f64> = grid.iter().map(&target_log_density).collect();
    let proposal_log: Vec<f64> = grid.iter().map(|t| proposal.log_density_unnormalized(t)).collect();
    let exp_shifted = |logs: &[f64]| -> Result<Vec<f64>> {
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::ZeroMass);
        }
        Ok(logs.iter().map(|l| (l - max).exp()).collect())
    };
    let target = exp_shifted(&target_log)?;
    let proposal_vals = exp_shifted(&proposal_log)?;
    let target_sum: f64 = target.iter().sum();
    let proposal_sum: f64 = proposal_vals.iter().sum();
    let mut min_ratio = f64::INFINITY;
    for (p, q) in target.iter().zip(&proposal_vals) {
        if *p > 0.0 {
            min_ratio = min_ratio.min((q / proposal_sum) / (p / target_sum));
        }
    }
    if min_ratio == f64::INFINITY {
        return Err(Error::ZeroMass);
    }
    Ok(min_ratio)
}
