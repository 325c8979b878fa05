//! The `stats` command: IQM and bootstrap intervals over run CSVs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use plastic_replay_core::seeding::stream;
use plastic_replay_core::stats::{iqm, stratified_bootstrap_ci, ScoreMatrix, DEFAULT_REPS};

use crate::output::{fmt_f64, METRICS_HEADER};

/// Final score of one run file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunScore {
    pub path: PathBuf,
    pub task: String,
    pub sampler: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSummary {
    pub sampler: String,
    pub tasks: usize,
    pub runs: usize,
    pub iqm: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Reads a metrics CSV; the score is the last row's `episode_return` and
/// the task is the name of the directory holding the file.
pub fn read_run(path: &Path) -> anyhow::Result<RunScore> {
    let shown = path.display();
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {shown}"))?;
    let header = reader
        .headers()
        .with_context(|| format!("{shown}: reading header"))?
        .clone();
    if header.iter().ne(METRICS_HEADER) {
        bail!(
            "{shown}:1: unexpected header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        );
    }
    let mut last = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            anyhow::anyhow!("{shown}:{line}: {e}")
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");
        let step: Result<u64, _> = field(0).parse();
        let score: Result<f64, _> = field(1).parse();
        for (i, ok) in [
            (0, step.is_ok()),
            (1, score.is_ok()),
            (2, field(2).parse::<f64>().is_ok()),
            (3, field(3).parse::<f64>().is_ok()),
            (5, field(5).parse::<u64>().is_ok()),
        ] {
            if !ok {
                bail!("{shown}:{line}: bad {} `{}`", METRICS_HEADER[i], field(i));
            }
        }
        last = Some((field(4).to_string(), score.expect("checked above")));
    }
    let Some((sampler, score)) = last else {
        bail!("{shown}: no data rows");
    };
    let task = path
        .parent()
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "default".into());
    Ok(RunScore {
        path: path.to_path_buf(),
        task,
        sampler,
        score,
    })
}

/// Groups runs by sampler and task, and computes the pooled IQM with a
/// stratified bootstrap interval per sampler.
pub fn summarize(
    runs: &[RunScore],
    level: f64,
    reps: usize,
    seed: u64,
) -> anyhow::Result<Vec<SamplerSummary>> {
    let mut groups: BTreeMap<&str, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    for r in runs {
        groups
            .entry(&r.sampler)
            .or_default()
            .entry(&r.task)
            .or_default()
            .push(r.score);
    }
    let mut out = Vec::new();
    for (i, (sampler, tasks)) in groups.into_iter().enumerate() {
        let matrix = ScoreMatrix::new(
            tasks.keys().map(|t| t.to_string()).collect(),
            tasks.values().cloned().collect(),
        )?;
        let pooled = matrix.pooled();
        let mut rng = stream(seed, "bootstrap", i as u64);
        let (lo, hi) = stratified_bootstrap_ci(&matrix, reps, level, &mut rng)?;
        out.push(SamplerSummary {
            sampler: sampler.to_string(),
            tasks: tasks.len(),
            runs: pooled.len(),
            iqm: iqm(&pooled)?,
            ci_low: lo,
            ci_high: hi,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct StatsOutcome {
    pub summaries: Vec<SamplerSummary>,
    pub summary_csv: PathBuf,
    pub plot_csv: PathBuf,
}

pub fn cmd_stats(pattern: &str, level: f64, out_dir: &Path) -> anyhow::Result<StatsOutcome> {
    let mut paths = Vec::new();
    for entry in glob::glob(pattern).with_context(|| format!("bad glob `{pattern}`"))? {
        paths.push(entry?);
    }
    paths.sort();
    if paths.is_empty() {
        bail!("no files match `{pattern}`");
    }
    let runs = paths
        .iter()
        .map(|p| read_run(p))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let summaries = summarize(&runs, level, DEFAULT_REPS, 0)?;

    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let summary_csv = out_dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary_csv)?;
    w.write_record([
        "sampler", "tasks", "runs", "iqm", "ci_low", "ci_high", "level",
    ])?;
    for s in &summaries {
        w.write_record([
            s.sampler.clone(),
            s.tasks.to_string(),
            s.runs.to_string(),
            fmt_f64(s.iqm),
            fmt_f64(s.ci_low),
            fmt_f64(s.ci_high),
            fmt_f64(level),
        ])?;
    }
    w.flush()?;
    let plot_csv = out_dir.join("plot_data.csv");
    let mut w = csv::Writer::from_path(&plot_csv)?;
    w.write_record(["x", "y", "ylo", "yhi"])?;
    for s in &summaries {
        w.write_record([
            s.sampler.clone(),
            fmt_f64(s.iqm),
            fmt_f64(s.ci_low),
            fmt_f64(s.ci_high),
        ])?;
    }
    w.flush()?;
    Ok(StatsOutcome {
        summaries,
        summary_csv,
        plot_csv,
    })
}
