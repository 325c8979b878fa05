//! Bucketed approximation of age-weighted sampling.
//!
//! Live entries are split, in age order, into `B` contiguous buckets of
//! near-equal size. Each bucket's total weight is estimated as
//! `median weight x bucket size`, so a rebuild evaluates the schedule only
//! `O(B)` times. Sampling picks a bucket from those totals and then a uniform
//! entry inside it. Because weights are monotone in age and entries are stored
//! in age order, the median is just the central position of the bucket.

use alloc::vec::Vec;

use rand::Rng;

use super::DecaySchedule;
use crate::replay::ReplayBuffer;
use crate::{Error, Result};

/// Start of bucket `j` when `len` entries are split into `buckets` parts.
///
/// The first `len % buckets` buckets hold one extra entry.
#[inline]
fn boundary(len: usize, buckets: usize, j: usize) -> usize {
    j * (len / buckets) + j.min(len % buckets)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketIndex {
    bucket_count: usize,
    bucket_totals: Vec<f64>,
    cumulative: Vec<f64>,
    built_len: usize,
    built_pushes: u64,
    now: u64,
}

impl BucketIndex {
    pub fn bucket_count(&self) -> usize {
        self.bucket_count
    }

    /// `B + 1` logical positions; bucket `j` is `boundaries[j]..boundaries[j + 1]`.
    pub fn boundaries(&self) -> Vec<usize> {
        (0..=self.bucket_count)
            .map(|j| boundary(self.built_len, self.bucket_count, j))
            .collect()
    }

    pub fn bucket_totals(&self) -> &[f64] {
        &self.bucket_totals
    }

    /// Time the index was built for.
    pub fn now(&self) -> u64 {
        self.now
    }

    /// Pushes tolerated after a rebuild before the index counts as stale
    /// (5% of the live entries, at least one).
    pub fn staleness_budget(&self) -> u64 {
        (self.built_len as u64).div_ceil(20).max(1)
    }

    pub fn is_stale<O, A>(&self, buffer: &ReplayBuffer<O, A>) -> bool {
        buffer.total_pushes().saturating_sub(self.built_pushes) > self.staleness_budget()
    }

    /// Sampling probability of every entry in logical order, as implied by the
    /// bucket totals.
    pub fn entry_probabilities(&self) -> Vec<f64> {
        let total = *self.cumulative.last().unwrap_or(&0.0);
        let mut p = Vec::with_capacity(self.built_len);
        for j in 0..self.bucket_count {
            let size = boundary(self.built_len, self.bucket_count, j + 1)
                - boundary(self.built_len, self.bucket_count, j);
            let each = self.bucket_totals[j] / total / size as f64;
            p.extend(core::iter::repeat_n(each, size));
        }
        p
    }
}

/// Partitions the live entries into `buckets` age-ordered buckets and
/// estimates each bucket's weight from its median entry.
pub fn bucket_rebuild<O, A>(
    buffer: &ReplayBuffer<O, A>,
    schedule: &DecaySchedule,
    buckets: usize,
    now: u64,
) -> Result<BucketIndex> {
    if buckets == 0 {
        return Err(Error::Config("bucket count must be positive".into()));
    }
    let len = buffer.len();
    if len == 0 {
        return Err(Error::EmptyBuffer);
    }
    if buckets > len {
        return Err(Error::Config(alloc::format!(
            "bucket count {buckets} exceeds live entries {len}"
        )));
    }
    if let Some(newest) = buffer.newest_timestamp() {
        if newest > now {
            return Err(Error::Precondition {
                now,
                timestamp: newest,
            });
        }
    }
    let weight_at = |pos: usize| schedule.weight(now - buffer.timestamp_at_logical(pos));

    let bucket_totals: Vec<f64> = if buckets == len {
        // singleton buckets: the median is the entry itself
        let (older, newer) = buffer.timestamp_segments();
        let mut w = Vec::with_capacity(len);
        w.extend(older.iter().map(|&t| schedule.weight(now - t)));
        w.extend(newer.iter().map(|&t| schedule.weight(now - t)));
        w
    } else {
        let (base, extra) = (len / buckets, len % buckets);
        (0..buckets)
            .map(|j| {
                let lo = j * base + j.min(extra);
                let size = base + usize::from(j < extra);
                let mid = lo + size / 2;
                let median = if size % 2 == 1 {
                    weight_at(mid)
                } else {
                    0.5 * (weight_at(mid - 1) + weight_at(mid))
                };
                median * size as f64
            })
            .collect()
    };
    let cumulative: Vec<f64> = bucket_totals
        .iter()
        .scan(0.0, |acc, &t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    Ok(BucketIndex {
        bucket_count: buckets,
        bucket_totals,
        cumulative,
        built_len: len,
        built_pushes: buffer.total_pushes(),
        now,
    })
}

/// Hierarchical draw: bucket by approximate total, then uniform inside it.
///
/// Bucket ranges are re-derived from the buffer's current size, so entries
/// pushed since the rebuild are reachable; their weights are only reflected
/// at the next rebuild. Beyond the staleness budget this fails.
pub fn sample_batch_bucketed<O, A, R: Rng + ?Sized>(
    index: &BucketIndex,
    buffer: &ReplayBuffer<O, A>,
    batch: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let pushes = buffer.total_pushes().saturating_sub(index.built_pushes);
    if pushes > index.staleness_budget() {
        return Err(Error::Stale {
            pushes,
            budget: index.staleness_budget(),
        });
    }
    let len = buffer.len();
    if len == 0 {
        return Err(Error::EmptyBuffer);
    }
    let buckets = index.bucket_count;
    let total = index.cumulative[buckets - 1];
    let mut out = Vec::with_capacity(batch);
    for _ in 0..batch {
        let u = rng.random::<f64>() * total;
        let j = index
            .cumulative
            .partition_point(|&c| c <= u)
            .min(buckets - 1);
        let (lo, hi) = (boundary(len, buckets, j), boundary(len, buckets, j + 1));
        let width = hi - lo;
        let offset = ((rng.random::<f64>() * width as f64) as usize).min(width - 1);
        out.push(buffer.physical_index(lo + offset));
    }
    Ok(out)
}

/// Owns a [`BucketIndex`] and rebuilds it whenever it has gone stale.
#[derive(Debug, Clone)]
pub struct BucketedSampler {
    schedule: DecaySchedule,
    buckets: usize,
    index: Option<BucketIndex>,
    rebuilds: u64,
}

impl BucketedSampler {
    pub fn new(schedule: DecaySchedule, buckets: usize) -> Result<Self> {
        if buckets == 0 {
            return Err(Error::Config("bucket count must be positive".into()));
        }
        Ok(Self {
            schedule,
            buckets,
            index: None,
            rebuilds: 0,
        })
    }

    pub fn schedule(&self) -> &DecaySchedule {
        &self.schedule
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn rebuilds(&self) -> u64 {
        self.rebuilds
    }

    /// Drops the current index; the next call to `sample` rebuilds.
    pub fn request_rebuild(&mut self) {
        self.index = None;
    }

    pub fn sample<O, A, R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer<O, A>,
        now: u64,
        batch: usize,
        rng: &mut R,
    ) -> Result<Vec<usize>> {
        let fresh = self.index.as_ref().is_some_and(|ix| !ix.is_stale(buffer));
        if !fresh {
            let b = self.buckets.min(buffer.len().max(1));
            self.index = Some(bucket_rebuild(buffer, &self.schedule, b, now)?);
            self.rebuilds += 1;
        }
        let index = self.index.as_ref().expect("index built above");
        sample_batch_bucketed(index, buffer, batch, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replay::TimestampedTransition;
    use crate::sampling::{exact_probabilities_logical, sample_batch_exact};
    use crate::seeding::stream;
    use alloc::vec;
    use proptest::prelude::*;

    fn buffer(capacity: usize, timestamps: impl IntoIterator<Item = u64>) -> ReplayBuffer<(), ()> {
        let mut b = ReplayBuffer::new(capacity).unwrap();
        for t in timestamps {
            b.push(TimestampedTransition {
                state: (),
                action: (),
                reward: 0.0,
                next_state: (),
                done: false,
                timestamp: t,
            })
            .unwrap();
        }
        b
    }

    #[test]
    fn arithmetic_buckets_are_exact() {
        // ages [5,4,3,2,1,0] -> weights [0.5, 0.6, ..., 1.0]
        let b = buffer(6, 0..6);
        let s = DecaySchedule::linear(10, 0.01).unwrap();
        let ix = bucket_rebuild(&b, &s, 2, 5).unwrap();
        assert_eq!(ix.boundaries(), vec![0, 3, 6]);
        let exact = [0.5 + 0.6 + 0.7, 0.8 + 0.9 + 1.0];
        for (got, want) in ix.bucket_totals().iter().zip(exact) {
            assert!((got - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn singleton_buckets_hold_exact_weights() {
        let b = buffer(8, [0, 2, 3, 7, 11, 12, 20, 21]);
        let s = DecaySchedule::linear(15, 0.1).unwrap();
        let ix = bucket_rebuild(&b, &s, 8, 21).unwrap();
        let ages = b.ages(21).unwrap();
        for (total, age) in ix.bucket_totals().iter().zip(ages) {
            assert_eq!(*total, s.weight(age));
        }
        let p_exact = exact_probabilities_logical(&b, &s, 21).unwrap();
        for (a, e) in ix.entry_probabilities().iter().zip(p_exact) {
            assert!((a - e).abs() < 1e-15);
        }
    }

    #[test]
    fn single_bucket_is_uniform() {
        let b = buffer(10, 0..10);
        let s = DecaySchedule::linear(4, 0.1).unwrap();
        let ix = bucket_rebuild(&b, &s, 1, 9).unwrap();
        assert!(ix
            .entry_probabilities()
            .iter()
            .all(|p| (p - 0.1).abs() < 1e-15));
    }

    #[test]
    fn bucket_sizes_near_equal() {
        let b = buffer(103, 0..103);
        let s = DecaySchedule::linear(50, 0.1).unwrap();
        let ix = bucket_rebuild(&b, &s, 10, 102).unwrap();
        let ceil = 103usize.div_ceil(10);
        for w in ix.boundaries().windows(2) {
            let size = w[1] - w[0];
            assert!(size.abs_diff(ceil) <= 1);
        }
        assert_eq!(*ix.boundaries().last().unwrap(), 103);
    }

    #[test]
    fn configuration_errors() {
        let b = buffer(4, 0..4);
        let s = DecaySchedule::linear(4, 0.1).unwrap();
        assert!(matches!(
            bucket_rebuild(&b, &s, 0, 3),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            bucket_rebuild(&b, &s, 5, 3),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn stale_index_rejected() {
        let mut b = buffer(40, 0..40);
        let s = DecaySchedule::linear(20, 0.1).unwrap();
        let ix = bucket_rebuild(&b, &s, 4, 39).unwrap();
        assert_eq!(ix.staleness_budget(), 2);
        let mut rng = stream(0, "stale", 0);
        for t in 40..42 {
            b.push(TimestampedTransition {
                state: (),
                action: (),
                reward: 0.0,
                next_state: (),
                done: false,
                timestamp: t,
            })
            .unwrap();
        }
        assert!(sample_batch_bucketed(&ix, &b, 4, &mut rng).is_ok());
        b.push(TimestampedTransition {
            state: (),
            action: (),
            reward: 0.0,
            next_state: (),
            done: false,
            timestamp: 42,
        })
        .unwrap();
        assert_eq!(
            sample_batch_bucketed(&ix, &b, 4, &mut rng),
            Err(Error::Stale {
                pushes: 3,
                budget: 2
            })
        );
    }

    #[test]
    fn wrapper_rebuilds_when_stale() {
        let mut b = buffer(100, 0..100);
        let s = DecaySchedule::linear(50, 0.1).unwrap();
        let mut sampler = BucketedSampler::new(s, 10).unwrap();
        let mut rng = stream(0, "wrap", 0);
        sampler.sample(&b, 99, 8, &mut rng).unwrap();
        assert_eq!(sampler.rebuilds(), 1);
        for t in 100..106 {
            b.push(TimestampedTransition {
                state: (),
                action: (),
                reward: 0.0,
                next_state: (),
                done: false,
                timestamp: t,
            })
            .unwrap();
        }
        sampler.sample(&b, 105, 8, &mut rng).unwrap();
        assert_eq!(sampler.rebuilds(), 2);
        sampler.request_rebuild();
        sampler.sample(&b, 105, 8, &mut rng).unwrap();
        assert_eq!(sampler.rebuilds(), 3);
    }

    #[test]
    fn singleton_buckets_match_exact_sampler_distribution() {
        // wrapped ring so logical and physical order differ
        let b = buffer(12, 0..30);
        let s = DecaySchedule::linear(10, 0.05).unwrap();
        let ix = bucket_rebuild(&b, &s, 12, 29).unwrap();
        let n = 1_000_000;
        let mut h_bucket = vec![0usize; 12];
        let mut h_exact = vec![0usize; 12];
        for i in sample_batch_bucketed(&ix, &b, n, &mut stream(1, "bk", 0)).unwrap() {
            h_bucket[i] += 1;
        }
        for i in sample_batch_exact(&b, &s, 29, n, &mut stream(1, "ex", 0)).unwrap() {
            h_exact[i] += 1;
        }
        let weights: Vec<f64> = (0..12)
            .map(|slot| s.weight(29 - b.timestamp_at_slot(slot)))
            .collect();
        let p = crate::sampling::normalized_probabilities(&weights).unwrap();
        for slot in 0..12 {
            let sd = (p[slot] * (1.0 - p[slot]) / n as f64).sqrt();
            for h in [&h_bucket, &h_exact] {
                assert!((h[slot] as f64 / n as f64 - p[slot]).abs() < 5.0 * sd + 1e-12);
            }
        }
    }

    proptest! {
        // Within one unclamped linear segment the weights are an arithmetic
        // sequence, so median x size equals the exact bucket sum.
        #[test]
        fn arithmetic_sequence_exactness(n in 2usize..400, b_frac in 0.0f64..1.0, extra in 0u64..1000) {
            let buckets = 1 + ((n - 1) as f64 * b_frac) as usize;
            let decay = (n as u64) + extra + 1;
            let buf = buffer(n, 0..n as u64);
            let now = n as u64 - 1;
            let s = DecaySchedule::linear(decay, 1e-6).unwrap();
            let ix = bucket_rebuild(&buf, &s, buckets, now).unwrap();
            for j in 0..buckets {
                let b = ix.boundaries();
                let (lo, hi) = (b[j], b[j + 1]);
                let exact: f64 = (lo..hi).map(|p| s.weight(now - buf.timestamp_at_logical(p))).sum();
                prop_assert!((ix.bucket_totals()[j] - exact).abs() <= 1e-12 * exact);
            }
        }
    }
}
