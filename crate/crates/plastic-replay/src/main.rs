use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use plastic_replay::config::RunConfig;
use plastic_replay::verify::{cmd_verify, render_table, Mutation, VerifyOptions};
use plastic_replay::{bench, summary, train};

#[derive(Parser)]
#[command(
    name = "plastic-replay",
    version,
    about = "Age-weighted replay sampling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tabular theory property suite.
    Verify {
        /// Fewer instances per check.
        #[arg(long)]
        quick: bool,
        /// Inject a known defect to confirm the suite catches it.
        #[arg(long, value_parser = ["drop-inverse-k"])]
        mutate: Option<String>,
    },
    /// Train agents on the nonstationary chain and write metric CSVs.
    Train {
        /// Flat `key = value` config file; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// `--key=value` overrides applied after the file.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Time exact against bucketed weighted sampling.
    Bench {
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 2000)]
        b: usize,
        #[arg(long, default_value_t = 256)]
        batch: usize,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value = "out/bench.csv")]
        out: PathBuf,
    },
    /// IQM and stratified bootstrap intervals over run CSVs.
    Stats {
        #[arg(long)]
        glob: String,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value = "out/stats")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    plastic_replay::init_thread_pool();
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Verify { quick, mutate } => {
            let mutation = mutate.map(|_| Mutation::DropInverseK);
            let checks = cmd_verify(VerifyOptions { quick, mutation });
            print!("{}", render_table(&checks));
            if checks.iter().all(|c| c.passed) {
                Ok(ExitCode::SUCCESS)
            } else {
                for c in checks.iter().filter(|c| !c.passed) {
                    eprintln!("failed: {} (worst {:e})", c.name, c.worst);
                }
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Train { config, overrides } => {
            let cfg = match config {
                Some(path) => RunConfig::load(&path, &overrides)?,
                None => {
                    let mut cfg = RunConfig::default();
                    cfg.apply_overrides(&overrides)?;
                    cfg.validate()?;
                    cfg
                }
            };
            let outcome = train::cmd_train(&cfg)?;
            for c in &outcome.cells {
                let ret = c
                    .post_shift_return
                    .map_or("NA".to_string(), |r| format!("{r:.3}"));
                println!(
                    "{:<14} seed {:<4} post-shift return {ret:>8}  -> {}",
                    c.sampler,
                    c.seed,
                    c.path.display()
                );
            }
            println!("manifest: {}", outcome.manifest.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            n,
            b,
            batch,
            reps,
            out,
        } => {
            let report = bench::run_bench(n, b, batch, reps, 0)?;
            bench::print_report(std::io::stdout(), &report)?;
            bench::write_bench_csv(&out, &report)
                .with_context(|| format!("writing {}", out.display()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats { glob, level, out } => {
            let outcome = summary::cmd_stats(&glob, level, &out)?;
            for s in &outcome.summaries {
                println!(
                    "{:<14} runs {:<4} IQM {:>10.4}  CI [{:.4}, {:.4}]",
                    s.sampler, s.runs, s.iqm, s.ci_low, s.ci_high
                );
            }
            println!("summary: {}", outcome.summary_csv.display());
            println!("plot data: {}", outcome.plot_csv.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
