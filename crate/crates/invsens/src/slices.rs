//! Slice profiles and the continuous inverse-sensitivity mechanism.
//!
//! For estimands with interval range, the (smoothed) length function is
//! piecewise constant: the range splits into slices `I_k` on which the length
//! equals `k`. Sampling then happens in two stages — pick a slice with
//! probability proportional to `exp(-k * epsilon / 2) * |I_k|`, then a point
//! uniformly inside it — giving an exact sampler for the density
//! `exp(-len(x; t) * epsilon / 2) / Z` without any discretization error.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mechanisms::sample_categorical;

/// The base measure on the output range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseMeasure {
    /// Lebesgue measure on `[lo, hi]`; slice mass is total interval length.
    Lebesgue,
    /// `points` equi-spaced grid points spanning `[lo, hi]` (endpoints
    /// included); slice mass is the number of grid points it contains.
    Grid { points: usize },
}

/// One slice: the set of targets whose (smoothed) length equals `k`.
///
/// Regions are disjoint half-open intervals `[a, b)`. The half-open
/// convention is fixed for determinism; boundaries carry measure zero, so it
/// cannot affect the sampling law. The region that ends exactly at the top of
/// the range also owns that endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub k: u32,
    pub regions: Vec<(f64, f64)>,
}

/// Partition of an output range `[lo, hi]` into constant-length slices.
#[derive(Debug, Clone)]
pub struct SliceProfile {
    slices: Vec<Slice>,
    rho: f64,
    lo: f64,
    hi: f64,
    base: BaseMeasure,
}

impl SliceProfile {
    /// Validates and normalizes a profile.
    ///
    /// Requirements: every region lies inside `[lo, hi]` with `a <= b`;
    /// regions are pairwise disjoint; together they cover the range up to
    /// measure zero. Slices are sorted by `k` and empty regions are dropped.
    pub fn new(
        mut slices: Vec<Slice>,
        rho: f64,
        lo: f64,
        hi: f64,
        base: BaseMeasure,
    ) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param(format!("invalid range [{lo}, {hi}]")));
        }
        if !(rho >= 0.0) {
            return Err(Error::param(format!("rho must be nonnegative, got {rho}")));
        }
        if let BaseMeasure::Grid { points } = base {
            if points < 2 {
                return Err(Error::param("grid base measure needs at least 2 points"));
            }
        }
        let width = hi - lo;
        let scale = width.abs().max(1.0);
        for slice in &mut slices {
            for &(a, b) in &slice.regions {
                if !(a.is_finite() && b.is_finite() && a <= b) {
                    return Err(Error::param(format!("malformed region [{a}, {b})")));
                }
                if a < lo - 1e-9 * scale || b > hi + 1e-9 * scale {
                    return Err(Error::param(format!(
                        "region [{a}, {b}) escapes the range [{lo}, {hi}]"
                    )));
                }
            }
            slice.regions.retain(|&(a, b)| b > a);
        }
        slices.retain(|s| !s.regions.is_empty());
        if slices.is_empty() {
            return Err(Error::EmptyInput("slice profile"));
        }
        let mut ks: Vec<u32> = slices.iter().map(|s| s.k).collect();
        ks.sort_unstable();
        ks.dedup();
        if ks.len() != slices.len() {
            return Err(Error::param("duplicate slice index k"));
        }
        slices.sort_by_key(|s| s.k);

        // disjointness and coverage up to measure zero
        let mut all: Vec<(f64, f64)> = slices.iter().flat_map(|s| s.regions.iter().copied()).collect();
        all.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut covered = 0.0;
        let mut prev_end = lo;
        for &(a, b) in &all {
            if a < prev_end - 1e-9 * scale {
                return Err(Error::param(format!("overlapping regions near {a}")));
            }
            covered += b - a;
            prev_end = b;
        }
        if (covered - width).abs() > 1e-9 * scale {
            return Err(Error::param(format!(
                "regions cover {covered} of a range of width {width}"
            )));
        }
        Ok(SliceProfile { slices, rho, lo, hi, base })
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn base(&self) -> BaseMeasure {
        self.base
    }

    /// Mass of one region under the base measure.
    fn region_mass(&self, a: f64, b: f64) -> f64 {
        match self.base {
            BaseMeasure::Lebesgue => b - a,
            BaseMeasure::Grid { points } => {
                let mut count = self.grid_count_below(b, points) - self.grid_count_below(a, points);
                if b == self.hi {
                    count += 1; // the top region owns the final grid point
                }
                count as f64
            }
        }
    }

    /// Number of grid points t_j with t_j < v (exact hits excluded).
    fn grid_count_below(&self, v: f64, points: usize) -> i64 {
        let h = (self.hi - self.lo) / (points - 1) as f64;
        let q = (v - self.lo) / h;
        let r = q.round();
        let raw = if (q - r).abs() < 1e-9 { r as i64 } else { q.ceil() as i64 };
        raw.clamp(0, points as i64)
    }

    /// Base-measure mass of slice `k` (0 if the profile has no such slice).
    pub fn slice_measure(&self, k: u32) -> f64 {
        self.slices
            .iter()
            .find(|s| s.k == k)
            .map_or(0.0, |s| s.regions.iter().map(|&(a, b)| self.region_mass(a, b)).sum())
    }

    /// The slice index at `t`: the `k` of the region containing `t`.
    ///
    /// `t` at the very top of the range belongs to the region ending there.
    pub fn len_at(&self, t: f64) -> Result<u32> {
        if !(self.lo..=self.hi).contains(&t) {
            return Err(Error::param(format!(
                "target {t} outside the range [{}, {}]",
                self.lo, self.hi
            )));
        }
        for slice in &self.slices {
            for &(a, b) in &slice.regions {
                if (a <= t && t < b) || (t == b && b == self.hi) {
                    return Ok(slice.k);
                }
            }
        }
        // unreachable for a validated profile, but keep a defensive error
        Err(Error::param(format!("no region contains {t}")))
    }

    /// Normalized per-slice selection probabilities at privacy level `epsilon`.
    pub fn slice_probabilities(&self, epsilon: f64) -> Result<Vec<(u32, f64)>> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
        }
        let k_min = self.min_positive_k()?;
        let weights: Vec<(u32, f64)> = self
            .slices
            .iter()
            .map(|s| {
                let m: f64 = s.regions.iter().map(|&(a, b)| self.region_mass(a, b)).sum();
                (s.k, (-f64::from(s.k - k_min.min(s.k)) * epsilon / 2.0).exp() * m)
            })
            .collect();
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(weights.into_iter().map(|(k, w)| (k, w / total)).collect())
    }

    /// Smallest k whose slice carries positive base mass; exponent shifts are
    /// taken relative to it so normalization stays stable for large k*eps.
    fn min_positive_k(&self) -> Result<u32> {
        self.slices
            .iter()
            .filter(|s| s.regions.iter().map(|&(a, b)| self.region_mass(a, b)).sum::<f64>() > 0.0)
            .map(|s| s.k)
            .min()
            .ok_or(Error::ZeroMass)
    }

    /// Log of the normalized density (Lebesgue) or pmf (grid) at `t`.
    ///
    /// Evaluated in log space so ratios stay meaningful deep in the tails,
    /// where the density itself underflows.
    pub fn log_density(&self, epsilon: f64, t: f64) -> Result<f64> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
        }
        let k = self.len_at(t)?;
        let k_min = self.min_positive_k()?;
        let log_z = {
            let z: f64 = self
                .slices
                .iter()
                .map(|s| {
                    let m: f64 = s.regions.iter().map(|&(a, b)| self.region_mass(a, b)).sum();
                    (-f64::from(s.k - k_min.min(s.k)) * epsilon / 2.0).exp() * m
                })
                .sum();
            if z <= 0.0 {
                return Err(Error::ZeroMass);
            }
            z.ln()
        };
        Ok(-f64::from(k.saturating_sub(k_min)) * epsilon / 2.0 - log_z)
    }

    /// Normalized density (Lebesgue base) or pmf (grid base) at `t`.
    pub fn density(&self, epsilon: f64, t: f64) -> Result<f64> {
        Ok(self.log_density(epsilon, t)?.exp())
    }
}

/// The continuous inverse-sensitivity mechanism.
///
/// Draws slice `k` with probability proportional to
/// `exp(-k * epsilon / 2) * |I_k|`, then a point uniformly inside the chosen
/// slice (uniform over its grid points for a grid base measure).
pub fn continuous_mechanism<R: Rng + ?Sized>(
    profile: &SliceProfile,
    epsilon: f64,
    rng: &mut R,
) -> Result<f64> {
    let probs = profile.slice_probabilities(epsilon)?;
    let weights: Vec<f64> = probs.iter().map(|&(_, p)| p).collect();
    let slice = &profile.slices[sample_categorical(&weights, rng)];
    match profile.base {
        BaseMeasure::Lebesgue => {
            let lens: Vec<f64> = slice.regions.iter().map(|&(a, b)| b - a).collect();
            let total: f64 = lens.iter().sum();
            if total <= 0.0 {
                return Err(Error::ZeroMass);
            }
            let region_probs: Vec<f64> = lens.iter().map(|l| l / total).collect();
            let (a, b) = slice.regions[sample_categorical(&region_probs, rng)];
            let u: f64 = rng.random();
            Ok(a + u * (b - a))
        }
        BaseMeasure::Grid { points } => {
            let counts: Vec<i64> = slice
                .regions
                .iter()
                .map(|&(a, b)| profile.region_mass(a, b) as i64)
                .collect();
            let total: i64 = counts.iter().sum();
            if total <= 0 {
                return Err(Error::ZeroMass);
            }
            let mut pick = rng.random_range(0..total);
            for (&(a, _b), &c) in slice.regions.iter().zip(&counts) {
                if pick < c {
                    let j = profile.grid_count_below(a, points) + pick;
                    let h = (profile.hi - profile.lo) / (points - 1) as f64;
                    return Ok(profile.lo + j as f64 * h);
                }
                pick -= c;
            }
            unreachable!("pick lies within the total count");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use approx::assert_relative_eq;

    fn two_slice_profile(rho: f64) -> SliceProfile {
        // |I_0| = rho and |I_1| = rho * e, back to back from 0
        let e = std::f64::consts::E;
        SliceProfile::new(
            vec![
                Slice { k: 0, regions: vec![(0.0, rho)] },
                Slice { k: 1, regions: vec![(rho, rho + rho * e)] },
            ],
            rho,
            0.0,
            rho + rho * e,
            BaseMeasure::Lebesgue,
        )
        .unwrap()
    }

    #[test]
    fn validation_rejects_bad_profiles() {
        let mk = |regions: Vec<(f64, f64)>| {
            SliceProfile::new(
                vec![Slice { k: 0, regions }],
                0.0,
                0.0,
                1.0,
                BaseMeasure::Lebesgue,
            )
        };
        assert!(mk(vec![(0.0, 0.5)]).is_err()); // gap: covers half the range
        assert!(mk(vec![(0.0, 0.7), (0.5, 1.0)]).is_err()); // overlap
        assert!(mk(vec![(0.0, 1.2)]).is_err()); // escapes range
        assert!(mk(vec![(0.0, 1.0)]).is_ok());
        // duplicate k
        assert!(SliceProfile::new(
            vec![
                Slice { k: 0, regions: vec![(0.0, 0.5)] },
                Slice { k: 0, regions: vec![(0.5, 1.0)] },
            ],
            0.0,
            0.0,
            1.0,
            BaseMeasure::Lebesgue,
        )
        .is_err());
    }

    #[test]
    fn single_slice_is_uniform() {
        let p = SliceProfile::new(
            vec![Slice { k: 0, regions: vec![(0.0, 1.0)] }],
            0.0,
            0.0,
            1.0,
            BaseMeasure::Lebesgue,
        )
        .unwrap();
        let mut rng = SeededRng::new(31);
        let n = 50_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| continuous_mechanism(&p, 1.0, &mut rng).unwrap())
            .collect();
        assert!(draws.iter().all(|&t| (0.0..1.0).contains(&t)));
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
        // density of Uniform[0,1] is 1 everywhere
        assert_relative_eq!(p.density(1.0, 0.3).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_slice_masses_balance_at_eps_two() {
        // |I_1| = e * |I_0| exactly cancels e^{-eps/2} at eps = 2
        let p = two_slice_profile(0.1);
        let probs = p.slice_probabilities(2.0).unwrap();
        assert_eq!(probs.len(), 2);
        assert_relative_eq!(probs[0].1, 0.5, epsilon = 1e-12);
        assert_relative_eq!(probs[1].1, 0.5, epsilon = 1e-12);

        let mut rng = SeededRng::new(32);
        let trials = 100_000;
        let hits = (0..trials)
            .filter(|_| continuous_mechanism(&p, 2.0, &mut rng).unwrap() >= 0.1)
            .count();
        let freq = hits as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 3.0 * (0.25f64 / trials as f64).sqrt(), "freq {freq}");
    }

    #[test]
    fn len_at_follows_half_open_convention() {
        let p = two_slice_profile(0.25);
        assert_eq!(p.len_at(0.0).unwrap(), 0);
        assert_eq!(p.len_at(0.2499999).unwrap(), 0);
        assert_eq!(p.len_at(0.25).unwrap(), 1); // boundary belongs to the right
        assert_eq!(p.len_at(p.hi()).unwrap(), 1); // top endpoint owned by last region
        assert!(p.len_at(-0.1).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        let p = two_slice_profile(0.3);
        let eps = 1.3;
        // piecewise-constant: sum of density * region length
        let total: f64 = p
            .slices()
            .iter()
            .map(|s| {
                let d = p.density(eps, s.regions[0].0).unwrap();
                d * s.regions.iter().map(|&(a, b)| b - a).sum::<f64>()
            })
            .sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn log_density_survives_huge_exponents() {
        // k*eps/2 ~ 1250 underflows in linear space; log space must not
        let p = SliceProfile::new(
            vec![
                Slice { k: 0, regions: vec![(0.0, 0.5)] },
                Slice { k: 5000, regions: vec![(0.5, 1.0)] },
            ],
            0.0,
            0.0,
            1.0,
            BaseMeasure::Lebesgue,
        )
        .unwrap();
        let ld = p.log_density(0.5, 0.75).unwrap();
        assert!(ld.is_finite());
        assert_relative_eq!(ld, -5000.0 * 0.25 - 0.5f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn grid_base_counts_points() {
        // 11 points on [0,1]: 0, 0.1, ..., 1.0
        let p = SliceProfile::new(
            vec![
                Slice { k: 0, regions: vec![(0.0, 0.35)] },
                Slice { k: 1, regions: vec![(0.35, 1.0)] },
            ],
            0.0,
            0.0,
            1.0,
            BaseMeasure::Grid { points: 11 },
        )
        .unwrap();
        assert_eq!(p.slice_measure(0), 4.0); // 0, 0.1, 0.2, 0.3
        assert_eq!(p.slice_measure(1), 7.0); // 0.4 .. 1.0 inclusive
        let mut rng = SeededRng::new(33);
        for _ in 0..500 {
            let t = continuous_mechanism(&p, 1.0, &mut rng).unwrap();
            let j = (t * 10.0).round();
            assert_relative_eq!(t, j / 10.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_boundary_points_fall_right() {
        // region boundary exactly on a grid point: point belongs to the right
        let p = SliceProfile::new(
            vec![
                Slice { k: 0, regions: vec![(0.0, 0.5)] },
                Slice { k: 2, regions: vec![(0.5, 1.0)] },
            ],
            0.0,
            0.0,
            1.0,
            BaseMeasure::Grid { points: 5 },
        )
        .unwrap();
        // points 0, 0.25, 0.5, 0.75, 1.0
        assert_eq!(p.slice_measure(0), 2.0);
        assert_eq!(p.slice_measure(2), 3.0);
    }
}
