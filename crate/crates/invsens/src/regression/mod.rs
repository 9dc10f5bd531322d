//! Private robust regression under user-addition neighboring.
//!
//! The release target is the empirical risk minimizer of a robust linear
//! model. The key fact making inverse sensitivity tractable here: the number
//! of users whose *addition* moves the ERM to a given parameter has the
//! closed form `ceil(n * ||grad L_n(theta)|| / Bx)`, because each added row
//! can push the summed gradient by at most `Bx`. That turns the release into
//! a log-concave-like sampling problem over the parameter domain, attacked
//! two ways: a direct heuristic sampler from a Taylor expansion of the
//! density, and an exact-target Metropolis–Hastings chain whose bounded
//! proposal guarantees geometric mixing.

mod erm;
mod loss;
mod sampling;
mod sgd;

pub use erm::{solve_erm, target_log_density, user_addition_len, ErmSolution};
pub use loss::{loss_eval, RobustLoss};
pub use sampling::{
    direct_heuristic_sampler, mh_sampler, proposal_ratio_check, sample_proposal_q,
    BoundedProposal, MhRun,
};
pub use sgd::{private_sgd, sgd_max_steps, sgd_privacy_accountant};

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Linear-model dataset with a public row-norm bound.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    xs: Vec<DVector<f64>>,
    ys: Vec<f64>,
    bx: f64,
}

impl RegressionDataset {
    /// Requires every feature vector to satisfy `||x||_2 <= bx`.
    pub fn new(xs: Vec<DVector<f64>>, ys: Vec<f64>, bx: f64) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptyInput("regression dataset"));
        }
        if xs.len() != ys.len() {
            return Err(Error::param(format!(
                "{} feature rows but {} labels",
                xs.len(),
                ys.len()
            )));
        }
        if !(bx.is_finite() && bx > 0.0) {
            return Err(Error::param(format!("norm bound must be positive, got {bx}")));
        }
        let d = xs[0].len();
        for (i, x) in xs.iter().enumerate() {
            if x.len() != d {
                return Err(Error::param(format!("row {i} has dimension {} != {d}", x.len())));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::param(format!("row {i} has non-finite entries")));
            }
            let norm = x.norm();
            if norm > bx * (1.0 + 1e-12) {
                return Err(Error::param(format!(
                    "row {i} violates the norm bound: ||x|| = {norm} > {bx}"
                )));
            }
        }
        if ys.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("labels must be finite"));
        }
        Ok(RegressionDataset { xs, ys, bx })
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn dim(&self) -> usize {
        self.xs[0].len()
    }

    pub fn bx(&self) -> f64 {
        self.bx
    }

    pub fn rows(&self) -> impl Iterator<Item = (&DVector<f64>, f64)> {
        self.xs.iter().zip(self.ys.iter().copied())
    }

    /// Dataset with one extra row appended (user addition).
    pub fn with_row(&self, x: DVector<f64>, y: f64) -> Result<Self> {
        let mut xs = self.xs.clone();
        let mut ys = self.ys.clone();
        xs.push(x);
        ys.push(y);
        RegressionDataset::new(xs, ys, self.bx)
    }
}

/// Parameter domain with closed-form volume.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamDomain {
    Ball { center: DVector<f64>, radius: f64 },
    Box { low: DVector<f64>, high: DVector<f64> },
}

impl ParamDomain {
    pub fn ball(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::param(format!("ball radius must be positive, got {radius}")));
        }
        Ok(ParamDomain::Ball { center, radius })
    }

    pub fn bounding_box(low: DVector<f64>, high: DVector<f64>) -> Result<Self> {
        if low.len() != high.len() || low.is_empty() {
            return Err(Error::param("box bounds must share a positive dimension"));
        }
        if low.iter().zip(high.iter()).any(|(l, h)| !(l < h)) {
            return Err(Error::param("box must satisfy low < high per coordinate"));
        }
        Ok(ParamDomain::Box { low, high })
    }

    /// Symmetric box `[-r, r]^d`.
    pub fn centered_box(dim: usize, r: f64) -> Result<Self> {
        Self::bounding_box(
            DVector::from_element(dim, -r),
            DVector::from_element(dim, r),
        )
    }

    pub fn dim(&self) -> usize {
        match self {
            ParamDomain::Ball { center, .. } => center.len(),
            ParamDomain::Box { low, .. } => low.len(),
        }
    }

    pub fn contains(&self, theta: &DVector<f64>) -> bool {
        match self {
            ParamDomain::Ball { center, radius } => (theta - center).norm() <= *radius,
            ParamDomain::Box { low, high } => theta
                .iter()
                .zip(low.iter().zip(high.iter()))
                .all(|(t, (l, h))| l <= t && t <= h),
        }
    }

    pub fn center(&self) -> DVector<f64> {
        match self {
            ParamDomain::Ball { center, .. } => center.clone(),
            ParamDomain::Box { low, high } => (low + high) / 2.0,
        }
    }

    /// Euclidean projection onto the domain.
    pub fn project(&self, theta: &DVector<f64>) -> DVector<f64> {
        match self {
            ParamDomain::Ball { center, radius } => {
                let diff = theta - center;
                let norm = diff.norm();
                if norm <= *radius {
                    theta.clone()
                } else {
                    center + diff * (*radius / norm)
                }
            }
            ParamDomain::Box { low, high } => DVector::from_iterator(
                theta.len(),
                theta
                    .iter()
                    .zip(low.iter().zip(high.iter()))
                    .map(|(t, (l, h))| t.clamp(*l, *h)),
            ),
        }
    }

    /// Closed-form volume.
    pub fn volume(&self) -> f64 {
        match self {
            ParamDomain::Ball { center, radius } => unit_ball_volume(center.len()) * radius.powi(center.len() as i32),
            ParamDomain::Box { low, high } => {
                low.iter().zip(high.iter()).map(|(l, h)| h - l).product()
            }
        }
    }

    /// Uniform draw from the domain.
    pub fn sample_uniform<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        match self {
            ParamDomain::Ball { center, radius } => {
                let d = center.len();
                let u = crate::noise::sample_unit_sphere(rng, d);
                let r = *radius * rng.random::<f64>().powf(1.0 / d as f64);
                center + DVector::from_vec(u) * r
            }
            ParamDomain::Box { low, high } => DVector::from_iterator(
                low.len(),
                low.iter()
                    .zip(high.iter())
                    .map(|(l, h)| l + (h - l) * rng.random::<f64>()),
            ),
        }
    }

    /// Does the ellipsoid `{ ||H (theta - center_e)|| <= cap }` fit inside?
    pub(crate) fn contains_ellipsoid(
        &self,
        h_inv: &nalgebra::DMatrix<f64>,
        center_e: &DVector<f64>,
        cap: f64,
    ) -> bool {
        match self {
            ParamDomain::Ball { center, radius } => {
                // ||H^{-1}||_2 bound via Frobenius norm (conservative)
                let op_bound = h_inv.norm();
                (center_e - center).norm() + cap * op_bound <= *radius
            }
            ParamDomain::Box { low, high } => {
                // per-axis extent of the ellipsoid: cap * ||H^{-1} e_i||
                (0..low.len()).all(|i| {
                    let ext = cap * h_inv.row(i).norm();
                    center_e[i] - ext >= low[i] && center_e[i] + ext <= high[i]
                })
            }
        }
    }
}

/// Volume of the unit Euclidean ball in `R^d`.
pub(crate) fn unit_ball_volume(d: usize) -> f64 {
    std::f64::consts::PI.powf(d as f64 / 2.0) / statrs::function::gamma::gamma(d as f64 / 2.0 + 1.0)
}

/// Surface area of the unit sphere in `R^d` (the boundary of the unit ball).
pub(crate) fn unit_sphere_surface(d: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / statrs::function::gamma::gamma(d as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use approx::assert_relative_eq;

    #[test]
    fn dataset_validates_norm_bound() {
        let xs = vec![DVector::from_vec(vec![0.6, 0.8])];
        assert!(RegressionDataset::new(xs.clone(), vec![1.0], 1.0).is_ok());
        assert!(RegressionDataset::new(xs, vec![1.0], 0.9).is_err());
        assert!(RegressionDataset::new(vec![], vec![], 1.0).is_err());
    }

    #[test]
    fn volumes_are_closed_form() {
        let ball = ParamDomain::ball(DVector::zeros(2), 2.0).unwrap();
        assert_relative_eq!(ball.volume(), std::f64::consts::PI * 4.0, epsilon = 1e-12);
        let cube = ParamDomain::centered_box(3, 1.0).unwrap();
        assert_relative_eq!(cube.volume(), 8.0, epsilon = 1e-12);
        // d = 1 ball of radius r is the interval [-r, r]
        let seg = ParamDomain::ball(DVector::zeros(1), 0.5).unwrap();
        assert_relative_eq!(seg.volume(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn uniform_sampling_hit_rate_matches_volume() {
        // MC hit rate of the inscribed ball inside its bounding box
        let mut rng = SeededRng::new(51);
        for d in [1usize, 2, 3] {
            let ball = ParamDomain::ball(DVector::zeros(d), 1.0).unwrap();
            let box_dom = ParamDomain::centered_box(d, 1.0).unwrap();
            let n = 200_000;
            let hits = (0..n)
                .filter(|_| ball.contains(&box_dom.sample_uniform(&mut rng)))
                .count();
            let want = ball.volume() / box_dom.volume();
            let got = hits as f64 / n as f64;
            assert!((got - want).abs() < 0.01, "d={d}: hit rate {got} vs volume ratio {want}");
        }
    }

    #[test]
    fn projection_and_containment() {
        let ball = ParamDomain::ball(DVector::zeros(2), 1.0).unwrap();
        let p = ball.project(&DVector::from_vec(vec![3.0, 4.0]));
        assert_relative_eq!(p.norm(), 1.0, epsilon = 1e-12);
        assert!(ball.contains(&p));
        let cube = ParamDomain::centered_box(2, 1.0).unwrap();
        let q = cube.project(&DVector::from_vec(vec![2.0, -0.5]));
        assert_eq!(q, DVector::from_vec(vec![1.0, -0.5]));
    }

    #[test]
    fn ball_uniform_stays_inside_and_fills_shells() {
        let mut rng = SeededRng::new(52);
        let ball = ParamDomain::ball(DVector::from_vec(vec![1.0, -1.0]), 2.0).unwrap();
        let n = 100_000;
        let mut inner = 0;
        for _ in 0..n {
            let t = ball.sample_uniform(&mut rng);
            assert!(ball.contains(&t));
            // inner half-radius ball should get 1/4 of the mass in d = 2
            if (&t - ball.center()).norm() <= 1.0 {
                inner += 1;
            }
        }
        let frac = inner as f64 / n as f64;
        assert!((frac - 0.25).abs() < 0.01, "inner-shell fraction {frac}");
    }
}
