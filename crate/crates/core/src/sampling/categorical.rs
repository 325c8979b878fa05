use alloc::vec::Vec;

use rand::Rng;

use super::DecaySchedule;
use crate::replay::ReplayBuffer;
use crate::{Error, Result};

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `p_i = w_i / sum_j w_j`, order preserved.
pub fn normalized_probabilities(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let total = neumaier_sum(weights.iter().copied());
    Ok(weights.iter().map(|w| w / total).collect())
}

/// `0.5 * sum_i |p_i - q_i|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape {
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(0.5 * neumaier_sum(p.iter().zip(q).map(|(a, b)| (a - b).abs())))
}

/// Schedule weights for every live entry, indexed by physical slot.
pub fn schedule_weights<O, A>(
    buffer: &ReplayBuffer<O, A>,
    schedule: &DecaySchedule,
    now: u64,
) -> Result<Vec<f64>> {
    let ages_ok = buffer.newest_timestamp().is_none_or(|t| t <= now);
    if !ages_ok {
        return Err(Error::Precondition {
            now,
            timestamp: buffer.newest_timestamp().unwrap_or(0),
        });
    }
    Ok(buffer
        .timestamps()
        .iter()
        .map(|&t| schedule.weight(now - t))
        .collect())
}

/// Exact sampling probabilities in logical (oldest first) order.
pub fn exact_probabilities_logical<O, A>(
    buffer: &ReplayBuffer<O, A>,
    schedule: &DecaySchedule,
    now: u64,
) -> Result<Vec<f64>> {
    let weights: Vec<f64> = buffer
        .ages(now)?
        .into_iter()
        .map(|age| schedule.weight(age))
        .collect();
    normalized_probabilities(&weights)
}

/// `batch` i.i.d. draws from `Categorical(weights / sum(weights))`.
///
/// Builds a fresh prefix-sum array (O(N)) and binary-searches it per draw.
/// Intervals are half-open: index `i` owns `[cum_{i-1}, cum_i)`.
pub fn sample_categorical<R: Rng + ?Sized>(
    weights: &[f64],
    batch: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if weights.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &w in weights {
        acc += w;
        cumulative.push(acc);
    }
    let total = acc;
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Domain(
            "weights must have a positive finite sum".into(),
        ));
    }
    let last = weights.len() - 1;
    Ok((0..batch)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            cumulative.partition_point(|&c| c <= u).min(last)
        })
        .collect())
}

/// Exact age-weighted sampling (one pass over the buffer per call).
pub fn sample_batch_exact<O, A, R: Rng + ?Sized>(
    buffer: &ReplayBuffer<O, A>,
    schedule: &DecaySchedule,
    now: u64,
    batch: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let weights = schedule_weights(buffer, schedule, now)?;
    sample_categorical(&weights, batch, rng)
}
