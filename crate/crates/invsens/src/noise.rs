//! Primitive noise draws used by the mechanisms.
//!
//! Everything here is built on inverse-CDF or Box-Muller transforms of unit
//! uniforms, so the output of a mechanism is a deterministic function of the
//! generator's stream. That determinism is what makes the experiment CSVs
//! reproducible byte-for-byte from a seed.

use rand::Rng;

/// Standard (scale 1) Laplace quantile function.
///
/// Maps `u` in `(0, 1)` to a Laplace variate; `u = 0.5` maps to exactly `0`.
pub fn laplace_from_uniform(u: f64) -> f64 {
    debug_assert!(u > 0.0 && u < 1.0);
    if u < 0.5 {
        (2.0 * u).ln()
    } else {
        -(2.0 * (1.0 - u)).ln()
    }
}

/// Draw a standard `Laplace(0, 1)` variate.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    laplace_from_uniform(open_unit(rng))
}

/// Draw a standard normal via Box-Muller.
pub fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1 = open_unit(rng);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Uniform draw on the unit sphere in `R^d`.
pub fn sample_unit_sphere<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    assert!(d >= 1, "dimension must be at least 1");
    if d == 1 {
        return vec![if rng.random::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..d).map(|_| sample_std_normal(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Draw the radius `R ~ Gamma(shape = d, rate = 1)` for integer `d >= 1`.
///
/// For integer shape this is a sum of `d` unit exponentials, which is both
/// exact and branch-free; no need for a general Gamma sampler.
pub fn sample_gamma_radius<R: Rng + ?Sized>(rng: &mut R, d: usize) -> f64 {
    assert!(d >= 1, "shape must be at least 1");
    (0..d).map(|_| -open_unit(rng).ln()).sum()
}

/// Uniform on the open interval `(0, 1)`; rejects the measure-zero endpoint 0.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
