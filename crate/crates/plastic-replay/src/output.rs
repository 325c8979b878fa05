//! CSV persistence for metric rows.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use plastic_replay_core::agent::MetricsRow;

pub const METRICS_HEADER: [&str; 6] = [
    "global_step",
    "episode_return",
    "grad_l1",
    "grama_inactive_frac",
    "sampler",
    "seed",
];

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_metrics<W: Write>(out: W, rows: &[MetricsRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.write_record([
            r.global_step.to_string(),
            fmt_f64(r.episode_return),
            fmt_f64(r.grad_l1),
            fmt_f64(r.grama_inactive_frac),
            r.sampler.clone(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_file(path: &Path, rows: &[MetricsRow]) -> anyhow::Result<()> {
    let file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_metrics(std::io::BufWriter::new(file), rows)
}
