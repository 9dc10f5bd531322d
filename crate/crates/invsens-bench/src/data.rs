//! Data ingestion and synthetic generators.

use std::fs::File;
use std::path::Path;

use invsens::regression::RegressionDataset;
use invsens::rng::{mix_seed, SeededRng};
use invsens::Dataset1D;
use nalgebra::DVector;
use rand::Rng;

use crate::config::DatasetSource;
use crate::error::{BenchError, Result};

/// Seed lane reserved for dataset synthesis so data never shares a stream
/// with any (epsilon, trial) cell.
pub const DATA_LANE: u64 = u64::MAX;

/// Parse one numeric column out of a CSV file. Rows are reported 1-based by
/// their line in the file (the header line counts when present).
pub fn load_csv_column(path: &Path, column: usize, has_header: bool) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(|e| BenchError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .from_reader(file);
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record
            .map_err(|e| BenchError::config(format!("malformed csv {}: {e}", path.display())))?;
        let row = record.position().map_or(0, |p| p.line());
        let field = record.get(column).ok_or_else(|| {
            BenchError::config(format!(
                "row {row} of {} has {} column(s), expected at least {}",
                path.display(),
                record.len(),
                column + 1
            ))
        })?;
        let value: f64 = field.trim().parse().map_err(|_| {
            BenchError::config(format!(
                "non-numeric value '{field}' at row {row}, column {column} of {}",
                path.display()
            ))
        })?;
        if !value.is_finite() {
            return Err(BenchError::config(format!(
                "non-finite value '{field}' at row {row} of {}",
                path.display()
            )));
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(BenchError::config(format!("no data rows in {}", path.display())));
    }
    Ok(values)
}

pub fn synthetic_uniform<R: Rng + ?Sized>(n: usize, low: f64, high: f64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(low..high)).collect()
}

/// A drawn regression problem together with the parameter that generated it.
pub struct RegressionInstance {
    pub dataset: RegressionDataset,
    pub theta_star: DVector<f64>,
}

/// One-dimensional linear model: theta* ~ Uniform[-5, 5], features
/// Uniform[-x_half_width, x_half_width], responses theta*·x plus
/// Uniform[-noise_half_width, noise_half_width] noise.
pub fn synthetic_regression<R: Rng + ?Sized>(
    n: usize,
    x_half_width: f64,
    noise_half_width: f64,
    rng: &mut R,
) -> Result<RegressionInstance> {
    let theta_star = rng.random_range(-5.0..5.0);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.random_range(-x_half_width..x_half_width);
        let noise = if noise_half_width > 0.0 {
            rng.random_range(-noise_half_width..noise_half_width)
        } else {
            0.0
        };
        xs.push(DVector::from_element(1, x));
        ys.push(theta_star * x + noise);
    }
    let dataset = RegressionDataset::new(xs, ys, x_half_width)?;
    Ok(RegressionInstance { dataset, theta_star: DVector::from_element(1, theta_star) })
}

/// Materialize the one-dimensional dataset a source describes. Synthetic
/// draws come from the reserved data lane of `seed`, so repeated calls with
/// the same config reproduce the same dataset.
pub fn resolve_dataset(source: &DatasetSource, seed: u64) -> Result<Dataset1D> {
    match source {
        DatasetSource::CsvPath { path, column, has_header, low, high } => {
            let path = Path::new(path);
            let values = load_csv_column(path, *column, *has_header)?;
            let data_min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let data_max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = low.unwrap_or(data_min);
            let hi = high.unwrap_or(data_max.max(lo + f64::EPSILON * data_max.abs().max(1.0)));
            if data_min < lo || data_max > hi {
                return Err(BenchError::config(format!(
                    "csv values span [{data_min}, {data_max}], outside configured bounds [{lo}, {hi}]"
                )));
            }
            Ok(Dataset1D::new(values, lo, hi)?)
        }
        DatasetSource::SyntheticUniform { n, low, high } => {
            let mut rng = SeededRng::new(mix_seed(seed, DATA_LANE, 0));
            Ok(Dataset1D::new(synthetic_uniform(*n, *low, *high, &mut rng), *low, *high)?)
        }
        DatasetSource::SyntheticRegression { .. } => Err(BenchError::config(
            "a one-dimensional dataset was requested from a regression source",
        )),
    }
}
