//! Experiment configuration: JSON file format, per-experiment defaults, and
//! validation. Every check failure maps to exit code 2 in the binary.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    MedianSweep,
    RegressionSweep,
    StepFigure,
    Audit,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::MedianSweep => "median_sweep",
            Experiment::RegressionSweep => "regression_sweep",
            Experiment::StepFigure => "step_figure",
            Experiment::Audit => "audit",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        match s {
            "median_sweep" => Some(Experiment::MedianSweep),
            "regression_sweep" => Some(Experiment::RegressionSweep),
            "step_figure" => Some(Experiment::StepFigure),
            "audit" => Some(Experiment::Audit),
            _ => None,
        }
    }
}

/// Where experiment data comes from. CSV ingestion is single-column;
/// regression experiments generate their own (x, y) pairs.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    CsvPath {
        path: String,
        #[serde(default)]
        column: usize,
        #[serde(default)]
        has_header: bool,
        /// Clamp bounds for the mechanism; default to the data range.
        low: Option<f64>,
        high: Option<f64>,
    },
    SyntheticUniform {
        n: usize,
        low: f64,
        high: f64,
    },
    SyntheticRegression {
        n: usize,
        alpha: f64,
        noise_half_width: f64,
        x_half_width: f64,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSgd {
    pub q: Option<f64>,
    pub sigma: Option<f64>,
    pub eta0_grid: Option<Vec<f64>>,
}

/// On-disk config shape; every field optional, defaults are per-experiment.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<String>,
    pub epsilons: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub dataset_source: Option<DatasetSource>,
    pub rho: Option<f64>,
    pub delta: Option<f64>,
    pub mh_steps: Option<usize>,
    pub sgd: Option<RawSgd>,
    pub step_width: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct SgdConfig {
    /// Poisson sampling rate per step.
    pub q: f64,
    /// Gaussian noise multiplier; 0 switches to the non-private control.
    pub sigma: f64,
    /// Initial step sizes to select from, best per epsilon post hoc.
    pub eta0_grid: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Strictly ascending, all positive.
    pub epsilons: Vec<f64>,
    /// Trials per epsilon; the audit experiment reads this as pair count.
    pub trials: usize,
    pub seed: u64,
    pub source: DatasetSource,
    /// Smoothing radius; `None` means 1/n.
    pub rho: Option<f64>,
    /// Approximate-DP delta; `None` means n^{-1.1}.
    pub delta: Option<f64>,
    pub mh_steps: usize,
    pub sgd: SgdConfig,
    /// Quantization width T of the step estimand.
    pub step_width: u32,
}

fn default_epsilons(experiment: Experiment) -> Vec<f64> {
    match experiment {
        Experiment::StepFigure => vec![0.1],
        _ => vec![0.1, 0.3, 1.0],
    }
}

fn default_trials(experiment: Experiment) -> usize {
    match experiment {
        Experiment::MedianSweep => 50,
        Experiment::RegressionSweep => 30,
        Experiment::StepFigure => 1,
        Experiment::Audit => 200,
    }
}

fn default_source(experiment: Experiment) -> DatasetSource {
    match experiment {
        Experiment::MedianSweep => {
            DatasetSource::SyntheticUniform { n: 2000, low: 0.0, high: 1.0 }
        }
        Experiment::RegressionSweep => DatasetSource::SyntheticRegression {
            n: 1000,
            alpha: 1.0,
            noise_half_width: 1.0,
            x_half_width: 2.0,
        },
        Experiment::StepFigure => DatasetSource::SyntheticUniform { n: 200, low: 0.0, high: 1.0 },
        Experiment::Audit => DatasetSource::SyntheticUniform { n: 50, low: 0.0, high: 1.0 },
    }
}

pub const DEFAULT_ETA0_GRID: [f64; 6] = [0.05, 0.1, 0.3, 1.0, 3.0, 10.0];

/// Load, default-fill, and validate a config for the given subcommand.
/// `path = None` uses the built-in defaults; `seed_override` wins over the
/// file's seed.
pub fn load(
    path: Option<&Path>,
    experiment: Experiment,
    seed_override: Option<u64>,
) -> Result<ExperimentConfig> {
    let raw: RawConfig = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| BenchError::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| {
                BenchError::config(format!("failed to parse {}: {e}", p.display()))
            })?
        }
        None => RawConfig::default(),
    };
    validate(raw, experiment, seed_override)
}

pub fn validate(
    raw: RawConfig,
    experiment: Experiment,
    seed_override: Option<u64>,
) -> Result<ExperimentConfig> {
    if let Some(name) = &raw.experiment {
        let declared = Experiment::from_name(name)
            .ok_or_else(|| BenchError::config(format!("unknown experiment '{name}'")))?;
        if declared != experiment {
            return Err(BenchError::config(format!(
                "config declares experiment '{}' but the '{}' subcommand was invoked",
                declared.name(),
                experiment.name()
            )));
        }
    }

    let epsilons = raw.epsilons.unwrap_or_else(|| default_epsilons(experiment));
    if epsilons.is_empty() {
        return Err(BenchError::config("epsilons must be nonempty"));
    }
    if epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(BenchError::config("epsilons must be finite and positive"));
    }
    if epsilons.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(BenchError::config("epsilons must be strictly ascending"));
    }

    let trials = raw.trials.unwrap_or_else(|| default_trials(experiment));
    if trials < 1 {
        return Err(BenchError::config("trials must be at least 1"));
    }

    let source = raw.dataset_source.unwrap_or_else(|| default_source(experiment));
    validate_source(&source, experiment)?;

    if let Some(rho) = raw.rho {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(BenchError::config(format!("rho must be positive, got {rho}")));
        }
    }
    if let Some(delta) = raw.delta {
        if !(delta.is_finite() && delta > 0.0 && delta < 1.0) {
            return Err(BenchError::config(format!("delta must lie in (0, 1), got {delta}")));
        }
    }

    let mh_steps = raw.mh_steps.unwrap_or(500);
    if mh_steps < 1 {
        return Err(BenchError::config("mh_steps must be at least 1"));
    }

    let raw_sgd = raw.sgd.unwrap_or_default();
    let sgd = SgdConfig {
        q: raw_sgd.q.unwrap_or(0.004),
        sigma: raw_sgd.sigma.unwrap_or(2.0),
        eta0_grid: raw_sgd.eta0_grid.unwrap_or_else(|| DEFAULT_ETA0_GRID.to_vec()),
    };
    if !(sgd.q.is_finite() && sgd.q > 0.0 && sgd.q <= 1.0) {
        return Err(BenchError::config(format!("sgd.q must be in (0, 1], got {}", sgd.q)));
    }
    if !(sgd.sigma.is_finite() && sgd.sigma >= 0.0) {
        return Err(BenchError::config(format!("sgd.sigma must be nonnegative, got {}", sgd.sigma)));
    }
    if sgd.eta0_grid.is_empty() || sgd.eta0_grid.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(BenchError::config("sgd.eta0_grid must be nonempty with positive entries"));
    }

    let step_width = raw.step_width.unwrap_or(100);
    if step_width < 1 {
        return Err(BenchError::config("step_width must be at least 1"));
    }
    if experiment == Experiment::StepFigure {
        for &eps in &epsilons {
            if f64::from(step_width) * eps < 10.0 - 1e-9 {
                return Err(BenchError::config(format!(
                    "step figure requires step_width * epsilon >= 10, got {step_width} * {eps}"
                )));
            }
        }
    }

    Ok(ExperimentConfig {
        experiment,
        epsilons,
        trials,
        seed: seed_override.or(raw.seed).unwrap_or(0),
        source,
        rho: raw.rho,
        delta: raw.delta,
        mh_steps,
        sgd,
        step_width,
    })
}

fn validate_source(source: &DatasetSource, experiment: Experiment) -> Result<()> {
    match source {
        DatasetSource::CsvPath { low, high, .. } => {
            if experiment == Experiment::RegressionSweep {
                return Err(BenchError::config(
                    "regression sweeps need a synthetic_regression dataset source",
                ));
            }
            if let (Some(lo), Some(hi)) = (low, high) {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(BenchError::config(format!(
                        "csv bounds must satisfy low < high, got [{lo}, {hi}]"
                    )));
                }
            }
        }
        DatasetSource::SyntheticUniform { n, low, high } => {
            if experiment == Experiment::RegressionSweep {
                return Err(BenchError::config(
                    "regression sweeps need a synthetic_regression dataset source",
                ));
            }
            if *n < 1 {
                return Err(BenchError::config("synthetic_uniform.n must be at least 1"));
            }
            if !(low.is_finite() && high.is_finite() && low < high) {
                return Err(BenchError::config(format!(
                    "synthetic_uniform bounds must satisfy low < high, got [{low}, {high}]"
                )));
            }
        }
        DatasetSource::SyntheticRegression { n, alpha, noise_half_width, x_half_width } => {
            if matches!(experiment, Experiment::MedianSweep | Experiment::StepFigure) {
                return Err(BenchError::config(format!(
                    "{} needs a one-dimensional dataset source",
                    experiment.name()
                )));
            }
            if *n < 1 {
                return Err(BenchError::config("synthetic_regression.n must be at least 1"));
            }
            if !(alpha.is_finite() && *alpha > 0.0) {
                return Err(BenchError::config(format!("alpha must be positive, got {alpha}")));
            }
            if !(noise_half_width.is_finite() && *noise_half_width >= 0.0) {
                return Err(BenchError::config(format!(
                    "noise_half_width must be nonnegative, got {noise_half_width}"
                )));
            }
            if !(x_half_width.is_finite() && *x_half_width > 0.0) {
                return Err(BenchError::config(format!(
                    "x_half_width must be positive, got {x_half_width}"
                )));
            }
        }
    }
    Ok(())
}
