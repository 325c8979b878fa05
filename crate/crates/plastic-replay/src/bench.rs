//! Exact versus bucketed sampling cost.

use std::hint::black_box;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{ensure, Context};
use plastic_replay_core::replay::{ReplayBuffer, TimestampedTransition};
use plastic_replay_core::sampling::{
    bucket_rebuild, sample_batch_bucketed, sample_categorical, schedule_weights, DecaySchedule,
};
use plastic_replay_core::seeding::stream;

use crate::output::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub n: usize,
    pub buckets: usize,
    pub batch: usize,
    pub reps: usize,
    /// Mean seconds per batch spent computing weights (exact: every entry;
    /// bucketed: index rebuild).
    pub exact_weight_s: f64,
    pub bucketed_weight_s: f64,
    /// Mean seconds per batch including the draws.
    pub exact_total_s: f64,
    pub bucketed_total_s: f64,
}

impl BenchReport {
    pub fn weight_speedup(&self) -> f64 {
        self.exact_weight_s / self.bucketed_weight_s
    }

    pub fn total_speedup(&self) -> f64 {
        self.exact_total_s / self.bucketed_total_s
    }
}

fn full_buffer(n: usize) -> anyhow::Result<ReplayBuffer<(), ()>> {
    let mut buf = ReplayBuffer::new(n)?;
    for t in 0..n as u64 {
        buf.push(TimestampedTransition {
            state: (),
            action: (),
            reward: 0.0,
            next_state: (),
            done: false,
            timestamp: t,
        })?;
    }
    Ok(buf)
}

fn mean_secs(d: Duration, reps: usize) -> f64 {
    d.as_secs_f64() / reps as f64
}

/// Times `reps` batches of each method on a full buffer of `n` entries
/// under the default linear schedule.
pub fn run_bench(
    n: usize,
    buckets: usize,
    batch: usize,
    reps: usize,
    seed: u64,
) -> anyhow::Result<BenchReport> {
    ensure!(
        buckets >= 1 && n >= buckets,
        "need n >= b >= 1 (n = {n}, b = {buckets})"
    );
    ensure!(batch >= 1 && reps >= 1, "batch and reps must be positive");
    let buf = full_buffer(n)?;
    let sched = DecaySchedule::default();
    let now = n as u64 - 1;
    let mut rng = stream(seed, "bench", 0);

    let (mut exact_w, mut exact_s) = (Duration::ZERO, Duration::ZERO);
    let (mut bucket_w, mut bucket_s) = (Duration::ZERO, Duration::ZERO);
    // one untimed round of each warms caches and the allocator
    for rep in 0..=reps {
        let t0 = Instant::now();
        let weights = schedule_weights(&buf, &sched, now)?;
        let t1 = Instant::now();
        black_box(sample_categorical(&weights, batch, &mut rng)?);
        let t2 = Instant::now();

        let index = bucket_rebuild(&buf, &sched, buckets, now)?;
        let t3 = Instant::now();
        black_box(sample_batch_bucketed(&index, &buf, batch, &mut rng)?);
        let t4 = Instant::now();
        if rep > 0 {
            exact_w += t1 - t0;
            exact_s += t2 - t0;
            bucket_w += t3 - t2;
            bucket_s += t4 - t2;
        }
    }
    Ok(BenchReport {
        n,
        buckets,
        batch,
        reps,
        exact_weight_s: mean_secs(exact_w, reps),
        bucketed_weight_s: mean_secs(bucket_w, reps),
        exact_total_s: mean_secs(exact_s, reps),
        bucketed_total_s: mean_secs(bucket_s, reps),
    })
}

pub fn write_bench_csv(path: &Path, report: &BenchReport) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record([
        "n",
        "buckets",
        "batch",
        "reps",
        "exact_weight_s",
        "bucketed_weight_s",
        "weight_speedup",
        "exact_total_s",
        "bucketed_total_s",
        "total_speedup",
    ])?;
    w.write_record([
        report.n.to_string(),
        report.buckets.to_string(),
        report.batch.to_string(),
        report.reps.to_string(),
        fmt_f64(report.exact_weight_s),
        fmt_f64(report.bucketed_weight_s),
        fmt_f64(report.weight_speedup()),
        fmt_f64(report.exact_total_s),
        fmt_f64(report.bucketed_total_s),
        fmt_f64(report.total_speedup()),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn print_report<W: Write>(mut out: W, r: &BenchReport) -> std::io::Result<()> {
    writeln!(
        out,
        "N = {}, B = {}, batch = {}, reps = {}",
        r.n, r.buckets, r.batch, r.reps
    )?;
    writeln!(
        out,
        "weights   exact {:>12.3} us   bucketed {:>12.3} us   speedup {:>8.1}x",
        r.exact_weight_s * 1e6,
        r.bucketed_weight_s * 1e6,
        r.weight_speedup()
    )?;
    writeln!(
        out,
        "per batch exact {:>12.3} us   bucketed {:>12.3} us   speedup {:>8.1}x",
        r.exact_total_s * 1e6,
        r.bucketed_total_s * 1e6,
        r.total_speedup()
    )
}
