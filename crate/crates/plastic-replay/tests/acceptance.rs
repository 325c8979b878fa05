//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p plastic-replay --test acceptance`.

use std::time::{Duration, Instant};

use plastic_replay::config::RunConfig;
use plastic_replay::train::cmd_train;
use plastic_replay::verify::{
    check_bound, check_fqi, check_gradient_identity, check_loss_decomposition, check_recursion,
    Sizes,
};
use plastic_replay_core::grama::grama_scores;
use plastic_replay_core::replay::{ReplayBuffer, TimestampedTransition};
use plastic_replay_core::sampling::{
    bucket_rebuild, exact_probabilities_logical, normalized_probabilities, sample_categorical,
    total_variation, DecaySchedule,
};
use plastic_replay_core::seeding::stream;
use plastic_replay_core::stats::{iqm, stratified_bootstrap_ci, ScoreMatrix};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn weight_table() -> Outcome {
    let lin = DecaySchedule::linear(100_000, 0.1).unwrap();
    let swa = DecaySchedule::swa(100_000, 0.1).unwrap();
    let exp1 = DecaySchedule::exponential(100_000, 0.1, 1.0).unwrap();
    let exp2 = DecaySchedule::exponential(1000, 0.01, 0.5).unwrap();
    let poly1 = DecaySchedule::polynomial(100_000, 0.1, 2.0).unwrap();
    let poly2 = DecaySchedule::polynomial(1000, 0.05, 0.5).unwrap();
    let table: [(&DecaySchedule, u64, f64); 24] = [
        (&lin, 0, 1.0),
        (&lin, 50_000, 0.5),
        (&lin, 95_000, 0.1),
        (&lin, 1_234_567, 0.1),
        (&swa, 0, 0.1),
        (&swa, 25_000, 0.35),
        (&swa, 90_000, 1.0),
        (&swa, 250_000, 1.0),
        (&exp1, 0, 1.0),
        (&exp1, 100_000, 0.367_879_441_171_442_32),
        (&exp1, 230_258, 0.100_000_509_300_701_5),
        (&exp1, 7, 0.999_930_002_449_942_8),
        (&exp2, 1, 0.998_001_998_667_333_1),
        (&exp2, 333, 0.513_759_511_229_998_4),
        (&exp2, 1000, 0.135_335_283_236_612_7),
        (&exp2, 5000, 0.01),
        (&poly1, 0, 1.0),
        (&poly1, 29_289, 0.500_004_552_1),
        (&poly1, 50_000, 0.25),
        (&poly1, 99_999, 0.1),
        (&poly2, 0, 1.0),
        (&poly2, 250, 0.866_025_403_784_438_6),
        (&poly2, 999, 0.05),
        (&poly2, 1000, 0.05),
    ];
    let worst = table
        .iter()
        .map(|(s, age, want)| (s.weight(*age) - want).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-12,
        format!("24 pairs, max |error| = {worst:.2e}"),
    )
}

fn chi_square() -> Outcome {
    let passes = (0..10u64)
        .filter(|&v| {
            let mut rng = stream(7, "acceptance-weights", v);
            let w: Vec<f64> = (0..1000).map(|_| rng.random_range(0.01..1.0)).collect();
            let p = normalized_probabilities(&w).unwrap();
            let mut counts = vec![0u64; w.len()];
            for i in
                sample_categorical(&w, 1_000_000, &mut stream(7, "acceptance-draws", v)).unwrap()
            {
                counts[i] += 1;
            }
            let stat: f64 = counts
                .iter()
                .zip(&p)
                .map(|(&c, &q)| {
                    let e = q * 1e6;
                    (c as f64 - e).powi(2) / e
                })
                .sum();
            ChiSquared::new(999.0).unwrap().sf(stat) > 0.01
        })
        .count();
    outcome(passes >= 9, format!("{passes}/10 vectors pass at 0.01"))
}

fn full_buffer(n: usize) -> ReplayBuffer<(), ()> {
    let mut buf = ReplayBuffer::new(n).unwrap();
    for t in 0..n as u64 {
        buf.push(TimestampedTransition {
            state: (),
            action: (),
            reward: 0.0,
            next_state: (),
            done: false,
            timestamp: t,
        })
        .unwrap();
    }
    buf
}

fn bucket_tv() -> Outcome {
    let n = 1_000_000;
    let buf = full_buffer(n);
    let sched = DecaySchedule::default();
    let now = n as u64 - 1;
    let exact = exact_probabilities_logical(&buf, &sched, now).unwrap();
    let approx = bucket_rebuild(&buf, &sched, 2000, now)
        .unwrap()
        .entry_probabilities();
    let tv = total_variation(&exact, &approx).unwrap();
    outcome(tv < 0.02, format!("TV = {tv:.3e}"))
}

fn bench_speedup() -> Outcome {
    // measured the way users see it: the `bench` command in a fresh process
    let tmp = tempfile::tempdir().unwrap();
    let csv_path = tmp.path().join("bench.csv");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_plastic-replay"))
        .args([
            "bench", "--n", "1000000", "--b", "2000", "--batch", "256", "--reps", "20", "--out",
        ])
        .arg(&csv_path)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    if !status.success() {
        return outcome(false, format!("bench exited with {status}"));
    }
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let headers = reader.headers().unwrap().clone();
    let row = reader.records().next().unwrap().unwrap();
    let field = |name: &str| -> f64 {
        let i = headers.iter().position(|h| h == name).unwrap();
        row[i].parse().unwrap()
    };
    let s = field("weight_speedup");
    outcome(
        s >= 20.0,
        format!(
            "weight phase {:.1} us vs {:.1} us, speedup {s:.1}x",
            field("exact_weight_s") * 1e6,
            field("bucketed_weight_s") * 1e6
        ),
    )
}

fn from_check(c: plastic_replay::verify::Check) -> Outcome {
    outcome(c.passed, c.detail)
}

fn chain_ordering() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.out_dir = tmp.path().to_path_buf();
    let out = cmd_train(&cfg).unwrap();
    let ret = |sampler: &str, seed: u64| {
        out.cells
            .iter()
            .find(|c| c.sampler == sampler && c.seed == seed)
            .and_then(|c| c.post_shift_return)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let (mut swd_wins, mut swa_losses) = (0, 0);
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let (d, u, a) = (ret("swd", seed), ret("uniform", seed), ret("swa", seed));
        swd_wins += usize::from(d > u);
        swa_losses += usize::from(u > a);
        rows.push(format!("{d:.2}/{u:.2}/{a:.2}"));
    }
    outcome(
        swd_wins >= 4 && swa_losses >= 4,
        format!(
            "SWD > uniform {swd_wins}/5, uniform > SWA {swa_losses}/5 (swd/uniform/swa: {})",
            rows.join(", ")
        ),
    )
}

fn grama() -> Outcome {
    let mut rng = stream(5, "acceptance-grama", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let layers: Vec<Vec<f64>> = (0..3)
            .map(|_| {
                let width = rng.random_range(1..40);
                (0..width).map(|_| rng.random_range(0.0..5.0)).collect()
            })
            .collect();
        for layer in grama_scores(&layers) {
            let mean = layer.iter().sum::<f64>() / layer.len() as f64;
            worst = worst.max((mean - 1.0).abs());
        }
    }
    let pinned = grama_scores(&[vec![2.0, 0.0, 0.0, 2.0]]);
    let pinned_ok = pinned[0] == [2.0, 0.0, 0.0, 2.0];
    outcome(
        worst <= 1e-9 && pinned_ok,
        format!("max |layer mean - 1| = {worst:.2e}, pinned example {pinned_ok}"),
    )
}

fn statistics() -> Outcome {
    let exact = iqm(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
    let mut contained = 0;
    let mut deterministic = true;
    for m in 0..20u64 {
        let mut rng = stream(9, "acceptance-scores", m);
        let tasks = rng.random_range(1..5);
        let scores: Vec<Vec<f64>> = (0..tasks)
            .map(|_| {
                let runs = rng.random_range(3..10);
                (0..runs).map(|_| rng.random_range(-10.0..10.0)).collect()
            })
            .collect();
        let names = (0..tasks).map(|t| format!("task{t}")).collect();
        let matrix = ScoreMatrix::new(names, scores).unwrap();
        let point = iqm(&matrix.pooled()).unwrap();
        let ci = stratified_bootstrap_ci(&matrix, 2000, 0.95, &mut stream(m, "boot", 0)).unwrap();
        let again =
            stratified_bootstrap_ci(&matrix, 2000, 0.95, &mut stream(m, "boot", 0)).unwrap();
        contained += usize::from(ci.0 <= point && point <= ci.1);
        deterministic &= ci == again;
    }
    outcome(
        exact == 4.5 && contained == 20 && deterministic,
        format!("IQM([1..8]) = {exact}, CI contains point {contained}/20, deterministic {deterministic}"),
    )
}

fn train_determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = RunConfig::default();
    cfg.apply_overrides(&["--total_steps=4000", "--shift_step=2000", "--seeds=0,1"])
        .unwrap();
    cfg.out_dir = a.path().to_path_buf();
    let x = cmd_train(&cfg).unwrap();
    cfg.out_dir = b.path().to_path_buf();
    let y = cmd_train(&cfg).unwrap();
    let mut files = 0;
    let mut same = true;
    for (c, d) in x.cells.iter().zip(&y.cells) {
        same &= std::fs::read(&c.path).unwrap() == std::fs::read(&d.path).unwrap();
        files += 1;
    }
    // manifests differ only in the output directory they record
    let strip = |p: &std::path::Path| {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("out_dir"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let manifest_same = strip(&x.manifest) == strip(&y.manifest);
    outcome(
        same && manifest_same,
        format!("{files} CSVs byte-identical: {same}, manifests match: {manifest_same}"),
    )
}

fn main() {
    plastic_replay::init_thread_pool();
    let sizes = Sizes::full();
    // criteria 8 and 10 read the same FQI runs
    let fqi = std::cell::OnceCell::new();
    let fqi_pair = |want_slope: bool| {
        let (slope, swd) = fqi.get_or_init(|| check_fqi(sizes.fqi_instances, sizes.fqi_rounds));
        from_check(if want_slope {
            slope.clone()
        } else {
            swd.clone()
        })
    };

    type Criterion<'a> = (&'static str, Duration, Box<dyn FnMut() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        (
            "1 weight-law exactness",
            Duration::from_secs(1),
            Box::new(weight_table),
        ),
        (
            "2 sampler fidelity",
            Duration::from_secs(120),
            Box::new(chi_square),
        ),
        (
            "3 bucket approximation",
            Duration::from_secs(60),
            Box::new(bucket_tv),
        ),
        (
            "4 bucket speedup",
            Duration::from_secs(120),
            Box::new(bench_speedup),
        ),
        (
            "5 recursion exactness",
            Duration::from_secs(5),
            Box::new(|| from_check(check_recursion(sizes.recursion_visits))),
        ),
        (
            "6 loss decomposition",
            Duration::from_secs(30),
            Box::new(|| from_check(check_loss_decomposition(sizes.loss_instances))),
        ),
        (
            "7 gradient identity",
            Duration::from_secs(30),
            Box::new(|| from_check(check_gradient_identity(sizes.identity_instances, None))),
        ),
        (
            "8 1/k gradient decay",
            Duration::from_secs(120),
            Box::new(|| fqi_pair(true)),
        ),
        (
            "9 suboptimality bound",
            Duration::from_secs(60),
            Box::new(|| from_check(check_bound(sizes.bound_instances))),
        ),
        (
            "10 SWD restoration",
            Duration::from_secs(120),
            Box::new(|| fqi_pair(false)),
        ),
        (
            "11 chain ordering",
            Duration::from_secs(1800),
            Box::new(chain_ordering),
        ),
        (
            "12 GraMa properties",
            Duration::from_secs(1),
            Box::new(grama),
        ),
        (
            "13 statistics",
            Duration::from_secs(30),
            Box::new(statistics),
        ),
        (
            "14 train determinism",
            Duration::from_secs(300),
            Box::new(train_determinism),
        ),
    ];

    let mut failures = 0;
    for (name, budget, mut run) in criteria {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let ok = o.passed && took <= budget;
        failures += usize::from(!ok);
        let status = if ok { "PASS" } else { "FAIL" };
        let over = if took > budget {
            " (over time budget)"
        } else {
            ""
        };
        println!(
            "{status}  {name:<24} {:>8.2}s{over}  {}",
            took.as_secs_f64(),
            o.detail
        );
    }
    println!("{} of 14 criteria passed", 14 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
