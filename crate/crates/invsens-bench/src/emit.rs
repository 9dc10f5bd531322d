//! Result emission: a reproducible CSV, a JSON summary with per-epsilon
//! quantiles, and a wall-time sidecar.
//!
//! The CSV holds no timestamps or timings, so identical configs produce
//! byte-identical files; wall times land in `<out>.times.log` instead. The
//! summary quantiles use linear interpolation between order statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{BenchError, Result};

/// One mechanism invocation (or one analytic table entry).
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub experiment: String,
    pub mechanism: String,
    pub epsilon: f64,
    pub trial: usize,
    /// The exact RNG seed of this cell, for replay.
    pub seed: u64,
    /// `None` marks a run that could not execute (infeasible privacy target).
    pub output: Option<f64>,
    pub abs_error: Option<f64>,
    /// Goes to the sidecar only, never the CSV.
    pub wall_ms: f64,
}

pub const CSV_HEADER: &str = "experiment,mechanism,epsilon,trial,seed,output,abs_error,wall_ms";
pub const CSV_COMMENT: &str = "# summary quantiles use linear interpolation: q(p) sits at rank (n-1)*p between order statistics";

#[derive(Debug)]
pub struct EmissionPaths {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub times: PathBuf,
}

/// Per-(experiment, mechanism, epsilon) error statistics.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub mechanism: String,
    pub epsilon: f64,
    /// Records carrying an error value.
    pub count: usize,
    /// Records without one (infeasible runs).
    pub missing: usize,
    pub median_abs_error: Option<f64>,
    pub q05_abs_error: Option<f64>,
    pub q95_abs_error: Option<f64>,
}

/// Quantile by linear interpolation on a sorted slice: rank `(n-1)p`,
/// fractional part interpolated. `{1..100}` at p = 0.05 gives 5.95.
pub fn quantile_linear(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&p));
    let rank = (sorted.len() - 1) as f64 * p;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    // positive finite epsilons order by their bit patterns
    let mut groups: BTreeMap<(String, String, u64), (Vec<f64>, usize, f64)> = BTreeMap::new();
    for r in records {
        let key = (r.experiment.clone(), r.mechanism.clone(), r.epsilon.to_bits());
        let entry = groups.entry(key).or_insert_with(|| (Vec::new(), 0, r.epsilon));
        match r.abs_error {
            Some(e) => entry.0.push(e),
            None => entry.1 += 1,
        }
    }
    groups
        .into_iter()
        .map(|((experiment, mechanism, _), (mut errors, missing, epsilon))| {
            errors.sort_by(f64::total_cmp);
            let stat = |p: f64| {
                if errors.is_empty() {
                    None
                } else {
                    Some(quantile_linear(&errors, p))
                }
            };
            SummaryRow {
                experiment,
                mechanism,
                epsilon,
                count: errors.len(),
                missing,
                median_abs_error: stat(0.5),
                q05_abs_error: stat(0.05),
                q95_abs_error: stat(0.95),
            }
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write the CSV, the JSON summary (`<out>.summary.json`), and the timing
/// sidecar (`<out>.times.log`). Records should already be in their final
/// order.
pub fn emit_results(records: &[RunRecord], out: &Path) -> Result<EmissionPaths> {
    let mut csv = String::new();
    let _ = writeln!(csv, "{CSV_COMMENT}");
    let _ = writeln!(csv, "{CSV_HEADER}");
    for r in records {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},",
            r.experiment,
            r.mechanism,
            r.epsilon,
            r.trial,
            r.seed,
            fmt_opt(r.output),
            fmt_opt(r.abs_error),
        );
    }
    fs::write(out, csv).map_err(|e| BenchError::io(out, e))?;

    let times_path = PathBuf::from(format!("{}.times.log", out.display()));
    let mut times = String::from("experiment,mechanism,epsilon,trial,wall_ms\n");
    for r in records {
        let _ = writeln!(
            times,
            "{},{},{},{},{:.3}",
            r.experiment, r.mechanism, r.epsilon, r.trial, r.wall_ms
        );
    }
    fs::write(&times_path, times).map_err(|e| BenchError::io(&times_path, e))?;

    let summary_path = PathBuf::from(format!("{}.summary.json", out.display()));
    let rows = summarize(records);
    let mut json = serde_json::to_string_pretty(&rows)
        .map_err(|e| BenchError::config(format!("summary serialization failed: {e}")))?;
    json.push('\n');
    fs::write(&summary_path, json).map_err(|e| BenchError::io(&summary_path, e))?;

    Ok(EmissionPaths { csv: out.to_path_buf(), summary: summary_path, times: times_path })
}
