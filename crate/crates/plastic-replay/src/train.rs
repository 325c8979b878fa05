//! The `train` command: one agent run per (sampler, seed) cell.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Context;
use plastic_replay_core::agent::{run, RunOutput};
use plastic_replay_core::envs::NonstationaryChain;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::output::{fmt_f64, write_metrics_file};

#[derive(Debug, Clone)]
pub struct CellResult {
    pub sampler: String,
    pub seed: u64,
    pub path: PathBuf,
    pub post_shift_return: Option<f64>,
    pub updates: u64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub cells: Vec<CellResult>,
}

/// Runs every cell (in parallel when a pool is available) and writes
/// `out_dir/<experiment>/<sampler>_<seed>.csv` plus `manifest.txt`.
pub fn cmd_train(cfg: &RunConfig) -> anyhow::Result<TrainOutcome> {
    cfg.validate()?;
    let env = NonstationaryChain::new(cfg.chain_length, cfg.shift_step, cfg.max_episode_steps)?;
    let dir = cfg.out_dir.join(&cfg.experiment);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let cells: Vec<(String, u64)> = cfg
        .samplers
        .iter()
        .flat_map(|s| cfg.seeds.iter().map(move |&seed| (s.clone(), seed)))
        .collect();
    let outputs: Vec<anyhow::Result<RunOutput>> = cells
        .par_iter()
        .map(|(name, seed)| {
            let kind = cfg.sampler_kind(name)?;
            run(cfg.agent_config(kind, *seed), &env, cfg.total_steps)
                .with_context(|| format!("run {name} seed {seed}"))
        })
        .collect();

    let mut results = Vec::with_capacity(cells.len());
    for ((sampler, seed), out) in cells.into_iter().zip(outputs) {
        let out = out?;
        let path = dir.join(format!("{sampler}_{seed}.csv"));
        write_metrics_file(&path, &out.rows)?;
        results.push(CellResult {
            post_shift_return: out.mean_return_after(cfg.shift_step),
            updates: out.updates,
            sampler,
            seed,
            path,
        });
    }

    let mut manifest = String::from("# config\n");
    manifest.push_str(&cfg.to_text());
    manifest.push_str("# runs: file, sampler, seed, updates, post_shift_mean_return\n");
    for c in &results {
        let file = c
            .path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default();
        let ret = c
            .post_shift_return
            .map(fmt_f64)
            .unwrap_or_else(|| "NA".into());
        let _ = writeln!(
            manifest,
            "{file}, {}, {}, {}, {ret}",
            c.sampler, c.seed, c.updates
        );
    }
    let manifest_path = dir.join("manifest.txt");
    std::fs::write(&manifest_path, manifest)
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    Ok(TrainOutcome {
        dir,
        manifest: manifest_path,
        cells: results,
    })
}
