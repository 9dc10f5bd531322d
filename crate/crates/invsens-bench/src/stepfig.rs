//! Analytic 0.9-interval table for the quantized step estimand
//! f(x) = floor(sum_i q(x_i) / T): for every reachable query sum, the
//! shortest interval holding 0.9 of each mechanism's output distribution.
//! Everything is closed-form; no sampling.

use invsens::audit::{confidence_interval_discrete, step_len, step_smooth_sensitivity};
use invsens::median::default_delta;

use crate::config::{DatasetSource, ExperimentConfig};
use crate::data::load_csv_column;
use crate::emit::RunRecord;
use crate::error::{BenchError, Result};

pub const INTERVAL_LEVEL: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct StepFigureRow {
    pub epsilon: f64,
    /// Query sum s = sum_i q(x_i), enumerated 0..=n.
    pub s: u32,
    /// Estimand value floor(s / T), in f-units.
    pub f: f64,
    pub inv_lo: f64,
    pub inv_hi: f64,
    pub smooth_lo: f64,
    pub smooth_hi: f64,
}

/// Number of records the table is computed for; only the population size of
/// the source matters here, the estimand enumerates every possible sum.
fn population_size(source: &DatasetSource) -> Result<usize> {
    match source {
        DatasetSource::SyntheticUniform { n, .. } => Ok(*n),
        DatasetSource::CsvPath { path, column, has_header, .. } => {
            Ok(load_csv_column(std::path::Path::new(path), *column, *has_header)?.len())
        }
        DatasetSource::SyntheticRegression { .. } => Err(BenchError::config(
            "the step figure needs a one-dimensional dataset source",
        )),
    }
}

pub fn run_step_figure(config: &ExperimentConfig) -> Result<Vec<StepFigureRow>> {
    let n = population_size(&config.source)?;
    let width = config.step_width;
    if n < width as usize {
        return Err(BenchError::config(format!(
            "step width {width} exceeds the population size {n}; the estimand would be constant"
        )));
    }
    let delta = config.delta.unwrap_or_else(|| default_delta(n));
    let v_max = n as u32 / width;
    let points: Vec<f64> = (0..=v_max).map(f64::from).collect();

    let mut rows = Vec::with_capacity(config.epsilons.len() * (n + 1));
    for &epsilon in &config.epsilons {
        let beta = epsilon / (2.0 * (2.0 / delta).ln());
        for s in 0..=n as u32 {
            let f = f64::from(s / width);
            let masses: Vec<f64> = (0..=v_max)
                .map(|v| {
                    let len = step_len(n, width, s, i64::from(v))
                        .expect("targets up to v_max are reachable");
                    (-epsilon / 2.0 * f64::from(len)).exp()
                })
                .collect();
            let (inv_lo, inv_hi) = confidence_interval_discrete(&points, &masses, INTERVAL_LEVEL)?;
            let smooth_s = step_smooth_sensitivity(n, width, s, beta);
            let half = 2.0 * smooth_s / epsilon * (1.0 / (1.0 - INTERVAL_LEVEL)).ln();
            rows.push(StepFigureRow {
                epsilon,
                s,
                f,
                inv_lo,
                inv_hi,
                smooth_lo: f - half,
                smooth_hi: f + half,
            });
        }
    }
    Ok(rows)
}

/// Flatten interval endpoints into the fixed record schema: two records per
/// (sum, mechanism), distinguished by a `:lo` / `:hi` suffix, with the trial
/// column holding the sum and abs_error the endpoint's distance from f.
pub fn rows_to_records(rows: &[StepFigureRow], config: &ExperimentConfig) -> Vec<RunRecord> {
    let mut records = Vec::with_capacity(rows.len() * 4);
    for row in rows {
        let mut push = |mechanism: &str, endpoint: f64| {
            records.push(RunRecord {
                experiment: "step_figure".into(),
                mechanism: mechanism.into(),
                epsilon: row.epsilon,
                trial: row.s as usize,
                seed: config.seed,
                output: Some(endpoint),
                abs_error: Some((endpoint - row.f).abs()),
                wall_ms: 0.0,
            });
        };
        push("inverse_sensitivity:lo", row.inv_lo);
        push("inverse_sensitivity:hi", row.inv_hi);
        push("smooth_laplace:lo", row.smooth_lo);
        push("smooth_laplace:hi", row.smooth_hi);
    }
    records
}
