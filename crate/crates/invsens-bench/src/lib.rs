//! Benchmark and audit harness for the `invsens` mechanisms.
//!
//! The binary exposes four experiments, each driven by a JSON config and a
//! deterministic seed schedule so that a rerun with the same config and seed
//! is byte-identical:
//!
//! * `median` — accuracy sweep of the inverse-sensitivity median against
//!   smooth-sensitivity Laplace and plain Laplace baselines;
//! * `regression` — robust-regression release via Metropolis-Hastings
//!   against privately tuned SGD;
//! * `step-figure` — 0.9-confidence interval widths for a step statistic,
//!   both mechanisms, across the whole dataset family;
//! * `audit` — pointwise density-ratio privacy audits plus structural
//!   length-oracle checks.
//!
//! Results go to `--out` as CSV (one row per trial), with wall-clock times in
//! `<out>.times.log` and per-(experiment, mechanism, epsilon) summaries in
//! `<out>.summary.json`. Timing stays out of the CSV so reruns diff clean.

pub mod auditcmd;
pub mod config;
pub mod data;
pub mod emit;
pub mod error;
pub mod lenprofile;
pub mod stepfig;
pub mod sweeps;

pub use config::{DatasetSource, Experiment, ExperimentConfig, SgdConfig};
pub use emit::{emit_results, RunRecord};
pub use error::{BenchError, Result};
