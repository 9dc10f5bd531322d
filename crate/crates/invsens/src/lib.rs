//! Instance-adaptive differential privacy built on inverse sensitivity.
//!
//! Classical private estimators add noise scaled to the *global* sensitivity
//! of the estimand: the worst change any neighboring dataset could cause,
//! anywhere in data space. On friendly inputs that is far too much noise.
//! This crate implements mechanisms whose error adapts to the dataset at
//! hand by scoring each candidate output `t` with its *inverse sensitivity*:
//! the number of records that would need to change before the true answer
//! became `t`. Sampling `t` with probability proportional to
//! `exp(-len(x; t) * epsilon / 2)` is pure epsilon-DP and concentrates on
//! answers that are hard to refute.
//!
//! The crate provides:
//!
//! - [`mechanisms`]: Laplace and smooth-sensitivity Laplace baselines, plus
//!   the finite exponential mechanism all discrete samplers share.
//! - [`length`]: exhaustive inverse-sensitivity oracles on finite problems,
//!   the discrete mechanism, and its exact success probability.
//! - [`slices`]: the continuous mechanism, which partitions the output range
//!   into slices of constant (smoothed) length and samples slice-then-point.
//! - [`median`]: an exact `O(n log n)` private median sampler with closed-form
//!   lengths and slices, plus smooth-sensitivity machinery for the baseline.
//! - [`regression`]: private robust regression — an ERM solver, the
//!   inverse-sensitivity density under user addition, a direct heuristic
//!   sampler, a Metropolis–Hastings sampler with a bounded proposal, and a
//!   private-SGD baseline with a conservative accountant.
//! - [`audit`]: brute-force verifiers — density-ratio privacy audits,
//!   Lipschitz and smooth-bound checks, and distribution diagnostics.
//!
//! Every randomized routine takes `&mut impl Rng`, so results are exactly
//! reproducible from a seed; see [`rng::SeededRng`].

pub mod audit;
pub mod budget;
pub mod data;
pub mod error;
pub mod length;
pub mod mechanisms;
pub mod median;
pub mod noise;
pub mod regression;
pub mod rng;
pub mod slices;

pub use budget::{NeighborMode, PrivacyBudget};
pub use data::Dataset1D;
pub use error::{Error, Result};
pub use rng::SeededRng;

/// The guide's chapters double as doc-tests so the book cannot drift from
/// the library. Each empty module borrows one chapter as its documentation;
/// `cargo test --doc` then compiles and runs every Rust block in it.
#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../README.md")]
    pub mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/inverse-sensitivity.md")]
    pub mod inverse_sensitivity {}
    #[doc = include_str!("../../../book/src/median.md")]
    pub mod median {}
    #[doc = include_str!("../../../book/src/regression.md")]
    pub mod regression {}
    #[doc = include_str!("../../../book/src/auditing.md")]
    pub mod auditing {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
