//! The audit subcommand: pointwise density-ratio checks of the shipped
//! mechanisms plus exhaustive structural audits of the length oracles.

use invsens::audit::{
    audit_density_ratio, lipschitz_audit, problem_catalog, smooth_bound_audit, step_len,
    AuditRecord, AuditReport,
};
use invsens::length::{inverse_sensitivity_bruteforce, FiniteProblem};
use invsens::median::{
    local_sensitivity_median, median_density, median_len, smooth_sensitivity_median, MedianConfig,
};
use invsens::regression::{RobustLoss, RegressionDataset};
use invsens::rng::{mix_seed, SeededRng};
use invsens::Dataset1D;
use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use std::sync::Arc;

use crate::config::{DatasetSource, ExperimentConfig};
use crate::data::{resolve_dataset, synthetic_regression};
use crate::error::Result;
use crate::lenprofile::LenProfile;
use crate::sweeps::DOMAIN_HALF_WIDTH;

pub const AUDIT_GRID_POINTS: usize = 100;

pub struct AuditOutcome {
    pub records: Vec<AuditRecord>,
    /// Human-readable pass/fail lines for stdout.
    pub lines: Vec<String>,
}

fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

fn merge_reports(reports: Vec<AuditReport>) -> AuditReport {
    reports.into_iter().fold(
        AuditReport { max_log_ratio: 0.0, violating_pair: None, checks_run: 0 },
        AuditReport::merge,
    )
}

/// Density-ratio audit of the continuous median mechanism over random
/// substitution pairs. `fixed_base = None` redraws the base dataset per
/// pair; `Some` perturbs the given dataset instead.
#[allow(clippy::too_many_arguments)]
pub fn median_density_audit(
    n: usize,
    lo: f64,
    hi: f64,
    rho: f64,
    epsilon: f64,
    pairs: usize,
    grid_points: usize,
    seed: u64,
    lane: u64,
    fixed_base: Option<&[f64]>,
) -> Result<AuditReport> {
    let config = MedianConfig::continuous(rho);
    let grid = linspace(lo, hi, grid_points);
    let density = |d: &[f64], t: f64| {
        let ds = Dataset1D::new(d.to_vec(), lo, hi).expect("audit pair within bounds");
        median_density(&ds, epsilon, &config, t).expect("median density evaluation")
    };
    let reports: Vec<AuditReport> = (0..pairs)
        .into_par_iter()
        .map(|p| {
            let mut rng = SeededRng::new(mix_seed(seed, lane, p as u64));
            let base: Vec<f64> = match fixed_base {
                Some(values) => values.to_vec(),
                None => (0..n).map(|_| rng.random_range(lo..hi)).collect(),
            };
            let mut neighbor = base.clone();
            let idx = rng.random_range(0..base.len());
            neighbor[idx] = rng.random_range(lo..hi);
            audit_density_ratio(density, &[(base, neighbor)], &grid, epsilon)
        })
        .collect();
    Ok(merge_reports(reports))
}

/// Density-ratio audit of the regression release over user-addition pairs:
/// each pair is a fresh instance and the same instance with one adversarial
/// row appended. Densities are exact (piecewise-constant profile with
/// closed-form normalization).
#[allow(clippy::too_many_arguments)]
pub fn regression_density_audit(
    n: usize,
    alpha: f64,
    x_half_width: f64,
    noise_half_width: f64,
    epsilon: f64,
    pairs: usize,
    grid_points: usize,
    seed: u64,
    lane: u64,
) -> Result<AuditReport> {
    let loss = RobustLoss::new(alpha)?;
    let grid = linspace(-DOMAIN_HALF_WIDTH, DOMAIN_HALF_WIDTH, grid_points);
    let flatten = |ds: &RegressionDataset| -> Vec<f64> {
        ds.rows().flat_map(|(x, y)| [x[0], y]).collect()
    };
    let reports: Vec<Result<AuditReport>> = (0..pairs)
        .into_par_iter()
        .map(|p| -> Result<AuditReport> {
            let mut rng = SeededRng::new(mix_seed(seed, lane, p as u64));
            let base = synthetic_regression(n, x_half_width, noise_half_width, &mut rng)?.dataset;
            let x_new = rng.random_range(-x_half_width..x_half_width);
            let y_new = rng.random_range(-10.0..10.0);
            let neighbor = base.with_row(DVector::from_element(1, x_new), y_new)?;
            let profile_base =
                LenProfile::build(&loss, &base, -DOMAIN_HALF_WIDTH, DOMAIN_HALF_WIDTH)?;
            let profile_neighbor =
                LenProfile::build(&loss, &neighbor, -DOMAIN_HALF_WIDTH, DOMAIN_HALF_WIDTH)?;
            let flat_base = flatten(&base);
            let flat_neighbor = flatten(&neighbor);
            let base_len = flat_base.len();
            let density = |d: &[f64], t: f64| {
                if d.len() == base_len {
                    profile_base.density(epsilon, t)
                } else {
                    profile_neighbor.density(epsilon, t)
                }
            };
            Ok(audit_density_ratio(density, &[(flat_base, flat_neighbor)], &grid, epsilon))
        })
        .collect();
    let reports: Vec<AuditReport> = reports.into_iter().collect::<Result<_>>()?;
    Ok(merge_reports(reports))
}

/// Exhaustive Lipschitz and smooth-bound audits over the enumerable catalog;
/// returns one pass/fail line per check.
pub fn structural_audit_lines() -> Vec<String> {
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let mut lines = Vec::new();
    for entry in problem_catalog() {
        let max_diff = match entry.name {
            "finite_median" => lipschitz_audit(
                |d, t| {
                    Some(median_len(
                        &Dataset1D::new(d.to_vec(), 0.0, 2.0).expect("catalog values in range"),
                        t,
                    ))
                },
                &entry.problem,
                entry.problem.target_grid(),
            ),
            "quantized_step" => lipschitz_audit(
                |d, t| step_len(8, 3, d.iter().sum::<f64>().round() as u32, t.round() as i64),
                &entry.problem,
                entry.problem.target_grid(),
            ),
            _ => lipschitz_audit(
                |d, t| {
                    inverse_sensitivity_bruteforce(&entry.problem, d, t, 1e-9)
                        .expect("catalog problems stay under the enumeration cap")
                },
                &entry.problem,
                entry.problem.target_grid(),
            ),
        };
        lines.push(format!(
            "lipschitz_audit({}): max length difference {max_diff} {}",
            entry.name,
            verdict(max_diff <= 1)
        ));
    }

    let beta = 0.3;
    let problem = FiniteProblem::new(
        vec![0.0, 0.5, 1.0],
        4,
        Arc::new(|d: &[f64]| {
            let mut s = d.to_vec();
            s.sort_by(f64::total_cmp);
            s[1]
        }),
        vec![0.0, 0.5, 1.0],
    )
    .expect("tiny problem under the enumeration cap");
    let ok = smooth_bound_audit(
        |d| {
            smooth_sensitivity_median(&Dataset1D::new(d.to_vec(), 0.0, 1.0).unwrap(), beta)
                .expect("smooth sensitivity on catalog data")
        },
        |d| local_sensitivity_median(&Dataset1D::new(d.to_vec(), 0.0, 1.0).unwrap()),
        beta,
        &problem,
    );
    lines.push(format!("smooth_bound_audit(median, beta={beta}): {}", verdict(ok)));
    lines
}

pub fn run_audit(config: &ExperimentConfig) -> Result<AuditOutcome> {
    let mut lines = structural_audit_lines();
    let mut records = Vec::new();
    for (i, &epsilon) in config.epsilons.iter().enumerate() {
        let (mechanism, report) = match &config.source {
            DatasetSource::SyntheticUniform { n, low, high } => {
                let rho = config.rho.unwrap_or(1.0 / *n as f64);
                let report = median_density_audit(
                    *n,
                    *low,
                    *high,
                    rho,
                    epsilon,
                    config.trials,
                    AUDIT_GRID_POINTS,
                    config.seed,
                    i as u64,
                    None,
                )?;
                ("inverse_sensitivity_median", report)
            }
            DatasetSource::CsvPath { .. } => {
                let dataset = resolve_dataset(&config.source, config.seed)?;
                let rho = config.rho.unwrap_or(1.0 / dataset.len() as f64);
                let report = median_density_audit(
                    dataset.len(),
                    dataset.lo(),
                    dataset.hi(),
                    rho,
                    epsilon,
                    config.trials,
                    AUDIT_GRID_POINTS,
                    config.seed,
                    i as u64,
                    Some(dataset.values()),
                )?;
                ("inverse_sensitivity_median", report)
            }
            DatasetSource::SyntheticRegression { n, alpha, noise_half_width, x_half_width } => {
                let report = regression_density_audit(
                    *n,
                    *alpha,
                    *x_half_width,
                    *noise_half_width,
                    epsilon,
                    config.trials,
                    AUDIT_GRID_POINTS,
                    config.seed,
                    i as u64,
                )?;
                ("inverse_sensitivity_regression", report)
            }
        };
        lines.push(format!(
            "density_ratio_audit({mechanism}, eps={epsilon}): max_log_ratio={:.6} over {} checks {}",
            report.max_log_ratio,
            report.checks_run,
            if report.pass(epsilon) { "PASS" } else { "FAIL" }
        ));
        records.push(AuditRecord::from_report(mechanism, epsilon, &report));
    }
    Ok(AuditOutcome { records, lines })
}
