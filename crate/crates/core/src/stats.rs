//! Interquartile mean and stratified bootstrap intervals.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::{Error, Result};

pub const DEFAULT_REPS: usize = 2000;

/// Per-task run scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    tasks: Vec<String>,
    scores: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(tasks: Vec<String>, scores: Vec<Vec<f64>>) -> Result<Self> {
        if tasks.is_empty() || tasks.len() != scores.len() {
            return Err(Error::Domain(
                "score matrix needs one run list per task".into(),
            ));
        }
        if scores.iter().any(|runs| runs.is_empty()) {
            return Err(Error::Domain("every task needs at least one run".into()));
        }
        if scores.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Domain("scores must be finite".into()));
        }
        Ok(Self { tasks, scores })
    }

    pub fn tasks(&self) -> &[String] {
        &self.tasks
    }

    pub fn scores(&self) -> &[Vec<f64>] {
        &self.scores
    }

    pub fn pooled(&self) -> Vec<f64> {
        self.scores.iter().flatten().copied().collect()
    }
}

/// Mean of the middle half with fractional trimming: each tail drops
/// exactly `n/4` of mass, splitting boundary elements.
pub fn iqm(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("iqm of an empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(iqm_sorted(&sorted))
}

fn iqm_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let (lo, hi) = (n / 4.0, 3.0 * n / 4.0);
    let mut total = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        // element i owns the unit interval [i, i + 1)
        let a = (i as f64).max(lo);
        let b = (i as f64 + 1.0).min(hi);
        if b > a {
            total += (b - a) * x;
        }
    }
    total / (hi - lo)
}

/// Linear-interpolated percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = libm::floor(pos) as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Percentile bootstrap interval for the pooled IQM, resampling runs with
/// replacement inside each task. `draw(task, runs)` returns a run index in
/// `0..runs`.
pub fn stratified_bootstrap_ci_with(
    matrix: &ScoreMatrix,
    reps: usize,
    level: f64,
    mut draw: impl FnMut(usize, usize) -> usize,
) -> Result<(f64, f64)> {
    if reps < 100 {
        return Err(Error::Config(
            "bootstrap needs at least 100 replicates".into(),
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config("confidence level must lie in (0, 1)".into()));
    }
    let total: usize = matrix.scores.iter().map(Vec::len).sum();
    let mut pooled = Vec::with_capacity(total);
    let mut stats = Vec::with_capacity(reps);
    for _ in 0..reps {
        pooled.clear();
        for (t, runs) in matrix.scores.iter().enumerate() {
            for _ in 0..runs.len() {
                pooled.push(runs[draw(t, runs.len())]);
            }
        }
        pooled.sort_by(f64::total_cmp);
        stats.push(iqm_sorted(&pooled));
    }
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok((
        percentile_sorted(&stats, alpha),
        percentile_sorted(&stats, 1.0 - alpha),
    ))
}

pub fn stratified_bootstrap_ci<R: Rng + ?Sized>(
    matrix: &ScoreMatrix,
    reps: usize,
    level: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    stratified_bootstrap_ci_with(matrix, reps, level, |_, n| rng.random_range(0..n))
}
