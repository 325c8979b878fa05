//! Gradient-magnitude neuron activity (GraMa).
//!
//! A neuron's score is its batch-mean `|dL/dz|` divided by the mean of that
//! quantity over its layer. Neurons scoring at or below a threshold `tau`
//! are counted as inactive. Scores are taken w.r.t. pre-activations of the
//! hidden layers.

use alloc::vec::Vec;

use crate::nn::GradientRecord;

/// Layers whose mean magnitude is below this are treated as dead.
pub const DEGENERATE_LAYER_MEAN: f64 = 1e-12;

/// Default inactivity threshold for reporting.
pub const DEFAULT_TAU: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct GramaReport {
    pub scores: Vec<Vec<f64>>,
    pub inactive_fraction: f64,
    pub tau: f64,
    pub grad_l1: f64,
}

impl GramaReport {
    /// Scores the hidden layers of `record`; the output layer is left out.
    pub fn from_record(record: &GradientRecord, tau: f64) -> Self {
        let mut magnitudes = record.mean_preact_abs();
        magnitudes.pop();
        let scores = grama_scores(&magnitudes);
        Self {
            inactive_fraction: inactive_fraction(&scores, tau),
            scores,
            tau,
            grad_l1: grad_l1(record),
        }
    }
}

/// Per-neuron score: magnitude over its layer's mean magnitude.
pub fn grama_scores(magnitudes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    magnitudes
        .iter()
        .map(|layer| {
            let mean = layer.iter().sum::<f64>() / layer.len().max(1) as f64;
            if mean < DEGENERATE_LAYER_MEAN {
                alloc::vec![0.0; layer.len()]
            } else {
                layer.iter().map(|m| m / mean).collect()
            }
        })
        .collect()
}

/// Fraction of all neurons, pooled over layers, with score `<= tau`.
pub fn inactive_fraction(scores: &[Vec<f64>], tau: f64) -> f64 {
    let total: usize = scores.iter().map(Vec::len).sum();
    if total == 0 {
        return 0.0;
    }
    let inactive = scores.iter().flatten().filter(|&&s| s <= tau).count();
    inactive as f64 / total as f64
}

/// Sum of absolute parameter gradients divided by the batch size.
pub fn grad_l1(record: &GradientRecord) -> f64 {
    record.params.iter().map(|g| g.abs()).sum::<f64>() / record.batch_size.max(1) as f64
}
