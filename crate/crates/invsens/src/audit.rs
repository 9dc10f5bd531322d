//! Brute-force oracles and privacy auditing.
//!
//! Everything here either enumerates a small problem exhaustively (length
//! Lipschitz checks, smooth-bound validity) or compares mechanism densities
//! pointwise against the differential-privacy ratio bound. The module also
//! hosts the catalog of toy problems used throughout the test suites and the
//! quantized-step estimand with its analytic length formulas.

use std::sync::Arc;

use serde::Serialize;

use crate::budget::NeighborMode;
use crate::error::{Error, Result};
use crate::length::FiniteProblem;

/// Tolerance added to epsilon when deciding whether a ratio audit passes;
/// absorbs float noise in density evaluation, never a real privacy gap.
pub const DENSITY_RATIO_SLACK: f64 = 1e-9;

/// A named exhaustively-enumerable problem.
pub struct ProblemCatalogEntry {
    pub name: &'static str,
    pub problem: FiniteProblem,
}

/// Small problems with total, deterministic estimands:
///
/// * `finite_median` — lower median on {0,1,2}^4, 13-point target grid;
/// * `binary_mean` — mean on {0,1}^3;
/// * `quantized_step` — floor(sum / 3) on {0,1}^8.
pub fn problem_catalog() -> Vec<ProblemCatalogEntry> {
    let median_grid: Vec<f64> = (0..13).map(|i| i as f64 / 6.0).collect();
    let finite_median = FiniteProblem::new(
        vec![0.0, 1.0, 2.0],
        4,
        Arc::new(|d: &[f64]| {
            let mut s = d.to_vec();
            s.sort_by(f64::total_cmp);
            s[s.len().div_ceil(2) - 1]
        }),
        median_grid,
    )
    .expect("catalog problem within enumeration cap");
    let binary_mean = FiniteProblem::new(
        vec![0.0, 1.0],
        3,
        Arc::new(|d: &[f64]| d.iter().sum::<f64>() / d.len() as f64),
        vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
    )
    .expect("catalog problem within enumeration cap");
    let quantized_step = FiniteProblem::new(
        vec![0.0, 1.0],
        8,
        Arc::new(|d: &[f64]| {
            let s = d.iter().sum::<f64>().round() as i64;
            (s / 3) as f64
        }),
        vec![0.0, 1.0, 2.0],
    )
    .expect("catalog problem within enumeration cap");
    vec![
        ProblemCatalogEntry { name: "finite_median", problem: finite_median },
        ProblemCatalogEntry { name: "binary_mean", problem: binary_mean },
        ProblemCatalogEntry { name: "quantized_step", problem: quantized_step },
    ]
}

/// All neighbors of `dataset` under the given relation: every single-row
/// substitution by a different alphabet value, or every single-row addition.
pub fn enumerate_neighbors(
    dataset: &[f64],
    alphabet: &[f64],
    mode: NeighborMode,
) -> Vec<Vec<f64>> {
    match mode {
        NeighborMode::Substitution => {
            let mut out = Vec::with_capacity(dataset.len() * alphabet.len().saturating_sub(1));
            for i in 0..dataset.len() {
                for &a in alphabet {
                    if a != dataset[i] {
                        let mut d = dataset.to_vec();
                        d[i] = a;
                        out.push(d);
                    }
                }
            }
            out
        }
        NeighborMode::UserAddition => alphabet
            .iter()
            .map(|&a| {
                let mut d = dataset.to_vec();
                d.push(a);
                d
            })
            .collect(),
    }
}

/// Result of a pointwise density-ratio audit.
#[derive(Debug, Clone)]
pub struct AuditReport {
    /// Largest |log(p/q)| seen over all pairs and grid points; infinite when
    /// one side had zero (or invalid) density where the other was positive.
    pub max_log_ratio: f64,
    /// The (dataset, neighbor, point) achieving the max, kept only when the
    /// audit failed.
    pub violating_pair: Option<(Vec<f64>, Vec<f64>, f64)>,
    pub checks_run: usize,
}

impl AuditReport {
    pub fn pass(&self, epsilon: f64) -> bool {
        self.max_log_ratio <= epsilon + DENSITY_RATIO_SLACK
    }

    /// Combine two partial audits (pair audits are independent, so reports
    /// merge by max).
    pub fn merge(mut self, other: AuditReport) -> AuditReport {
        self.checks_run += other.checks_run;
        if other.max_log_ratio > self.max_log_ratio {
            self.max_log_ratio = other.max_log_ratio;
            self.violating_pair = other.violating_pair;
        }
        self
    }
}

/// One audit outcome in emission-ready form.
#[derive(Debug, Clone, Serialize)]
pub struct AuditRecord {
    pub mechanism: String,
    pub epsilon: f64,
    pub max_log_ratio: f64,
    pub pass: bool,
}

impl AuditRecord {
    pub fn from_report(mechanism: impl Into<String>, epsilon: f64, report: &AuditReport) -> Self {
        AuditRecord {
            mechanism: mechanism.into(),
            epsilon,
            max_log_ratio: report.max_log_ratio,
            pass: report.pass(epsilon),
        }
    }
}

/// Pointwise epsilon-DP check: max over `pairs` and `grid` of the absolute
/// log-ratio of *normalized* densities. A zero or invalid density facing a
/// positive one counts as an infinite violation; shared zeros are skipped.
pub fn audit_density_ratio(
    density: impl Fn(&[f64], f64) -> f64,
    pairs: &[(Vec<f64>, Vec<f64>)],
    grid: &[f64],
    epsilon: f64,
) -> AuditReport {
    let mut max_log_ratio = 0.0f64;
    let mut arg: Option<(usize, f64)> = None;
    let mut checks_run = 0;
    for (idx, (a, b)) in pairs.iter().enumerate() {
        for &t in grid {
            checks_run += 1;
            let pa = density(a, t);
            let pb = density(b, t);
            let ratio = if pa == 0.0 && pb == 0.0 {
                continue;
            } else if !(pa.is_finite() && pb.is_finite()) || pa < 0.0 || pb < 0.0 {
                f64::INFINITY
            } else if pa == 0.0 || pb == 0.0 {
                f64::INFINITY
            } else {
                (pa / pb).ln().abs()
            };
            if ratio > max_log_ratio {
                max_log_ratio = ratio;
                arg = Some((idx, t));
            }
        }
    }
    let violating_pair = if max_log_ratio > epsilon + DENSITY_RATIO_SLACK {
        arg.map(|(i, t)| (pairs[i].0.clone(), pairs[i].1.clone(), t))
    } else {
        None
    };
    AuditReport { max_log_ratio, violating_pair, checks_run }
}

/// Max of |len(x; t) - len(x'; t)| over every dataset of the problem, every
/// substitution neighbor, and every target. A sound length is 1-Lipschitz,
/// so anything above 1 disproves the implementation. An infinite length
/// facing a finite one reports `u32::MAX`.
pub fn lipschitz_audit(
    len_fn: impl Fn(&[f64], f64) -> Option<u32>,
    problem: &FiniteProblem,
    targets: &[f64],
) -> u32 {
    let mut max_diff = 0u32;
    for dataset in problem.datasets() {
        for neighbor in enumerate_neighbors(&dataset, problem.alphabet(), NeighborMode::Substitution)
        {
            for &t in targets {
                let diff = match (len_fn(&dataset, t), len_fn(&neighbor, t)) {
                    (None, None) => 0,
                    (Some(a), Some(b)) => a.abs_diff(b),
                    _ => u32::MAX,
                };
                max_diff = max_diff.max(diff);
            }
        }
    }
    max_diff
}

/// Exhaustive validity check for a smooth upper bound `S` of a local
/// sensitivity `LS`: requires `LS(x) <= S(x)` everywhere and
/// `S(x) <= e^beta S(x')` across every substitution-neighbor pair.
pub fn smooth_bound_audit(
    s_fn: impl Fn(&[f64]) -> f64,
    ls_fn: impl Fn(&[f64]) -> f64,
    beta: f64,
    problem: &FiniteProblem,
) -> bool {
    let slack = |v: f64| v * (1.0 + 1e-9) + 1e-12;
    for dataset in problem.datasets() {
        let s = s_fn(&dataset);
        if ls_fn(&dataset) > slack(s) {
            return false;
        }
        for neighbor in enumerate_neighbors(&dataset, problem.alphabet(), NeighborMode::Substitution)
        {
            if s > slack(beta.exp() * s_fn(&neighbor)) {
                return false;
            }
        }
    }
    true
}

/// Shortest interval of probability at least `level` for a piecewise-constant
/// density given as cells (`edges` has one more entry than `masses`).
///
/// Exact for piecewise-constant densities: an optimal interval can always be
/// anchored with one endpoint on a cell edge, so both sweeps (left endpoints
/// on edges, right endpoints on edges) with partial trimming of the far cell
/// cover every candidate. Ties resolve to the leftmost interval. Masses are
/// normalized internally.
pub fn confidence_interval(edges: &[f64], masses: &[f64], level: f64) -> Result<(f64, f64)> {
    if edges.len() != masses.len() + 1 || masses.is_empty() {
        return Err(Error::param("need k+1 edges for k cells, k >= 1"));
    }
    if edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("cell edges must be strictly increasing"));
    }
    if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::param("cell masses must be finite and nonnegative"));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::param(format!("level must be in (0, 1), got {level}")));
    }
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let need = level * total;
    let cells = masses.len();
    let mut prefix = vec![0.0; cells + 1];
    for i in 0..cells {
        prefix[i + 1] = prefix[i] + masses[i];
    }
    let tie = 1e-12 * (edges[cells] - edges[0]);
    let mut best: Option<(f64, f64, f64)> = None; // (length, a, b)
    let mut consider = |a: f64, b: f64| {
        let len = b - a;
        let better = match best {
            None => true,
            Some((bl, ba, _)) => len < bl - tie || (len <= bl + tie && a < ba),
        };
        if better {
            best = Some((len, a, b));
        }
    };
    // left endpoints on edges
    let mut j = 0;
    for i in 0..cells {
        if j < i {
            j = i;
        }
        while j < cells && prefix[j + 1] - prefix[i] < need {
            j += 1;
        }
        if j == cells {
            break;
        }
        let short = need - (prefix[j] - prefix[i]);
        let density = masses[j] / (edges[j + 1] - edges[j]);
        consider(edges[i], edges[j] + short / density);
    }
    // right endpoints on edges
    let mut i = 0;
    for j in 0..cells {
        if prefix[j + 1] < need {
            continue;
        }
        while prefix[j + 1] - prefix[i + 1] >= need {
            i += 1;
        }
        let short = need - (prefix[j + 1] - prefix[i + 1]);
        let density = masses[i] / (edges[i + 1] - edges[i]);
        consider(edges[i + 1] - short / density, edges[j + 1]);
    }
    best.map(|(_, a, b)| (a, b)).ok_or(Error::ZeroMass)
}

/// Shortest interval of mass at least `level` for a discrete distribution on
/// sorted support `points`. Ties resolve to the leftmost window.
pub fn confidence_interval_discrete(
    points: &[f64],
    masses: &[f64],
    level: f64,
) -> Result<(f64, f64)> {
    if points.len() != masses.len() || points.is_empty() {
        return Err(Error::param("points and masses must be equal-length and nonempty"));
    }
    if points.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("support points must be strictly increasing"));
    }
    if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::param("masses must be finite and nonnegative"));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::param(format!("level must be in (0, 1), got {level}")));
    }
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let need = level * total;
    let mut best: Option<(f64, f64, f64)> = None;
    let mut window = 0.0;
    let mut i = 0;
    for j in 0..points.len() {
        window += masses[j];
        while window - masses[i] >= need {
            window -= masses[i];
            i += 1;
        }
        if window >= need {
            let (len, a, b) = (points[j] - points[i], points[i], points[j]);
            let better = match best {
                None => true,
                Some((bl, ba, _)) => len < bl || (len == bl && a < ba),
            };
            if better {
                best = Some((len, a, b));
            }
        }
    }
    best.map(|(_, a, b)| (a, b)).ok_or(Error::ZeroMass)
}

/// Total-variation distance between the empirical distribution of `samples`
/// over the cells defined by `edges` and a reference mass vector. Samples
/// outside the edges count fully against the reference.
pub fn tv_distance(samples: &[f64], edges: &[f64], reference: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    if edges.len() != reference.len() + 1 || reference.is_empty() {
        return Err(Error::param("need k+1 edges for k reference cells, k >= 1"));
    }
    if edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("cell edges must be strictly increasing"));
    }
    let ref_total: f64 = reference.iter().sum();
    if !(ref_total > 0.0) || reference.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::param("reference masses must be nonnegative with positive total"));
    }
    let cells = reference.len();
    let mut counts = vec![0u64; cells];
    let mut outside = 0u64;
    for &s in samples {
        if s < edges[0] || s > edges[cells] {
            outside += 1;
            continue;
        }
        let cell = edges.partition_point(|e| *e <= s).saturating_sub(1).min(cells - 1);
        counts[cell] += 1;
    }
    let n = samples.len() as f64;
    let mut tv = outside as f64 / n;
    for (c, r) in counts.iter().zip(reference) {
        tv += (*c as f64 / n - r / ref_total).abs();
    }
    Ok(tv / 2.0)
}

/// Quantized-step estimand `f(x) = floor(sum_i q(x_i) / width)` for a binary
/// per-record query `q`: analytic inverse-sensitivity length of reaching
/// value `target` from a dataset with query sum `s` out of `n` records.
/// `None` marks unreachable targets.
pub fn step_len(n: usize, width: u32, s: u32, target: i64) -> Option<u32> {
    debug_assert!(width >= 1 && s as usize <= n);
    let (t, s, n) = (i64::from(width), i64::from(s), n as i64);
    if target < 0 || target * t > n {
        return None;
    }
    let f = s / t;
    Some(if target == f {
        0
    } else if target > f {
        (target * t - s) as u32
    } else {
        (s - (target + 1) * t + 1) as u32
    })
}

/// Local sensitivity of the quantized step: 1 exactly when one substitution
/// can move the sum across a multiple of `width`.
pub fn step_local_sensitivity(n: usize, width: u32, s: u32) -> u32 {
    debug_assert!(width >= 1 && s as usize <= n);
    let down = s % width == 0 && s > 0;
    let up = s % width == width - 1 && (s as usize) < n;
    u32::from(down || up)
}

/// Smooth sensitivity of the quantized step at inverse temperature `beta`:
/// since local sensitivity is binary, this is `e^{-beta D}` with `D` the
/// Hamming distance to the nearest sum with local sensitivity 1 (0.0 when no
/// such sum exists).
pub fn step_smooth_sensitivity(n: usize, width: u32, s: u32, beta: f64) -> f64 {
    debug_assert!(beta >= 0.0);
    for d in 0..=n as u32 {
        let below = s >= d && step_local_sensitivity(n, width, s - d) == 1;
        let above = (s + d) as usize <= n && step_local_sensitivity(n, width, s + d) == 1;
        if below || above {
            return (-beta * f64::from(d)).exp();
        }
    }
    0.0
}
