//! Theory-lab property suite behind the `verify` command.

use std::fmt::Write as _;

use plastic_replay_core::envs::{random_mdp, TabularMDP};
use plastic_replay_core::sampling::DecaySchedule;
use plastic_replay_core::seeding::{stream, Rng};
use plastic_replay_core::theory::{
    atom, bellman_apply, empirical_gradient_decomposition, expected_loss_enumerated, fqi_run,
    initial_gradient_decomposition, optimal_q, population_gradient, population_loss,
    population_loss_decomposition, suboptimality_check, suboptimality_check_from,
    EmpiricalDistribution, FqiConfig, GradientDecomposition, TabularQ,
};
use rand::Rng as _;
use rayon::prelude::*;

pub const RECURSION_TOL: f64 = 1e-12;
pub const LOSS_TOL: f64 = 1e-12;
pub const IDENTITY_TOL: f64 = 1e-9;
pub const FD_REL_TOL: f64 = 1e-6;
pub const SLOPE_RANGE: (f64, f64) = (-1.2, -0.8);
pub const SWD_WIN_FRACTION: f64 = 0.9;

/// Deliberate defects for checking that the suite catches them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Distributional-shift term without its `1/k` factor.
    DropInverseK,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub quick: bool,
    pub mutation: Option<Mutation>,
}

/// Instance counts for each check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sizes {
    pub recursion_visits: usize,
    pub loss_instances: u64,
    pub identity_instances: u64,
    pub fd_instances: u64,
    pub bound_instances: u64,
    pub fqi_instances: u64,
    pub fqi_rounds: usize,
}

impl Sizes {
    pub fn full() -> Self {
        Self {
            recursion_visits: 10_000,
            loss_instances: 50,
            identity_instances: 50,
            fd_instances: 20,
            bound_instances: 100,
            fqi_instances: 10,
            fqi_rounds: 1024,
        }
    }

    pub fn quick() -> Self {
        Self {
            recursion_visits: 10_000,
            loss_instances: 10,
            identity_instances: 10,
            fd_instances: 5,
            bound_instances: 20,
            fqi_instances: 3,
            fqi_rounds: 1024,
        }
    }
}

/// Random MDP with `S <= 5`, `A <= 3`, `H <= 4`, plus a generator for the
/// rest of the instance.
pub fn random_instance(seed: u64) -> (TabularMDP, Rng) {
    let mut rng = stream(seed, "instance", 0);
    let s = rng.random_range(1..=5);
    let a = rng.random_range(1..=3);
    let h = rng.random_range(1..=4);
    let mdp = random_mdp(seed, s, a, h).expect("positive sizes");
    (mdp, rng)
}

pub fn random_q(rng: &mut Rng, mdp: &TabularMDP) -> TabularQ {
    let hmax = mdp.horizon() as f64;
    TabularQ::from_fn(mdp.states(), mdp.actions(), mdp.horizon(), |_, _, _| {
        rng.random_range(0.0..hmax)
    })
}

fn random_measure(rng: &mut Rng, atoms: usize, visits: u64) -> EmpiricalDistribution {
    let mut mu = EmpiricalDistribution::new(atoms);
    for _ in 0..visits {
        mu.update(rng.random_range(0..atoms))
            .expect("atom in range");
    }
    mu
}

/// Identity residual, optionally with the defect applied.
fn residual(d: &GradientDecomposition, k: f64, mutation: Option<Mutation>) -> f64 {
    let scale = match mutation {
        Some(Mutation::DropInverseK) => k,
        None => 1.0,
    };
    d.lhs
        .iter()
        .zip(&d.dist_shift_term)
        .zip(&d.target_drift_term)
        .map(|((l, s), t)| (l - (scale * s + t)).abs())
        .fold(0.0, f64::max)
}

pub fn check_recursion(visits: usize) -> Check {
    let mut rng = stream(0, "recursion", 0);
    let atoms = 24;
    let mut mu = EmpiricalDistribution::new(atoms);
    let mut counts = vec![0u64; atoms];
    for _ in 0..visits {
        let v = rng.random_range(0..atoms);
        counts[v] += 1;
        mu.update(v).expect("atom in range");
    }
    let worst = mu
        .masses()
        .iter()
        .zip(&counts)
        .map(|(m, &c)| (m - c as f64 / visits as f64).abs())
        .fold(0.0, f64::max);
    Check {
        name: "distribution recursion",
        passed: worst <= RECURSION_TOL,
        worst,
        detail: format!("{visits} visits, max |mass - frequency| = {worst:.3e}"),
    }
}

pub fn check_loss_decomposition(instances: u64) -> Check {
    let worst = (0..instances)
        .into_par_iter()
        .map(|seed| {
            let (mdp, mut rng) = random_instance(seed);
            let n = mdp.states() * mdp.actions();
            let visits = rng.random_range(1..50);
            let mu = random_measure(&mut rng, n, visits);
            let g = random_q(&mut rng, &mdp);
            let f: Vec<f64> = (0..n)
                .map(|_| rng.random_range(0.0..mdp.horizon() as f64))
                .collect();
            (1..=mdp.horizon())
                .map(|h| {
                    let (res, var) =
                        population_loss_decomposition(&mu, &mdp, h, &f, &g).expect("shapes");
                    let full = expected_loss_enumerated(&mu, &mdp, h, &f, &g).expect("shapes");
                    (res + var - full).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Check {
        name: "loss decomposition",
        passed: worst <= LOSS_TOL,
        worst,
        detail: format!(
            "{instances} instances, max |residual + variance - enumerated| = {worst:.3e}"
        ),
    }
}

/// Population identity on random instances plus the sample form along FQI
/// runs; also confirms the drift term vanishes at the last step.
pub fn check_gradient_identity(instances: u64, mutation: Option<Mutation>) -> Check {
    let results: Vec<(f64, bool)> = (0..instances)
        .into_par_iter()
        .map(|seed| {
            let (mdp, mut rng) = random_instance(seed);
            let n = mdp.states() * mdp.actions();
            let k: u64 = rng.random_range(2..80);
            let prev = random_measure(&mut rng, n, k - 1);
            let next_prev = random_q(&mut rng, &mdp);
            let next_cur = random_q(&mut rng, &mdp);
            let d_hat = rng.random_range(0..n);
            let mut mu = prev.clone();
            mu.update(d_hat).expect("atom in range");
            let mut worst = 0.0f64;
            let mut drift_zero = true;
            for h in 1..=mdp.horizon() {
                let t_prev = bellman_apply(&mdp, h, &next_prev).expect("shapes");
                let f_prev: Vec<f64> = (0..n)
                    .map(|i| {
                        if prev.masses()[i] > 0.0 {
                            t_prev[i]
                        } else {
                            rng.random_range(0.0..2.0)
                        }
                    })
                    .collect();
                let d = initial_gradient_decomposition(
                    &mu, d_hat, &mdp, h, &f_prev, &next_prev, &next_cur, k,
                )
                .expect("f_prev minimizes the previous loss");
                worst = worst.max(residual(&d, k as f64, mutation));
                if h == mdp.horizon() {
                    drift_zero &= d.target_drift_term.iter().all(|&x| x == 0.0);
                }
            }

            // sample form along a short FQI run on the same MDP
            let run = fqi_run(
                &mdp,
                40,
                None,
                &FqiConfig {
                    seed,
                    ..Default::default()
                },
            )
            .expect("valid run");
            for h in 1..=mdp.horizon() {
                let samples = &run.samples[h - 1];
                let mut mu = EmpiricalDistribution::new(n);
                for k in 1..=samples.len() {
                    let x = samples[k - 1];
                    mu.update(atom(x.state, x.action, mdp.actions()))
                        .expect("atom in range");
                    let prev = &run.fits[k - 1];
                    let d = empirical_gradient_decomposition(
                        &mu,
                        &samples[..k],
                        h,
                        prev.step(h),
                        prev,
                        &run.fits[k],
                    )
                    .expect("fits minimize the previous loss");
                    worst = worst.max(residual(&d, k as f64, mutation));
                    if h == mdp.horizon() {
                        drift_zero &= d.target_drift_term.iter().all(|&x| x == 0.0);
                    }
                }
            }
            (worst, drift_zero)
        })
        .collect();
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let drift_zero = results.iter().all(|r| r.1);
    Check {
        name: "gradient decomposition",
        passed: worst <= IDENTITY_TOL && drift_zero,
        worst,
        detail: format!(
            "{instances} instances, max |lhs - (shift + drift)| = {worst:.3e}, drift zero at h = H: {drift_zero}"
        ),
    }
}

pub fn check_gradient_fd(instances: u64) -> Check {
    let worst = (0..instances)
        .into_par_iter()
        .map(|seed| {
            let (mdp, mut rng) = random_instance(seed);
            let n = mdp.states() * mdp.actions();
            let mu = random_measure(&mut rng, n, 30);
            let g = random_q(&mut rng, &mdp);
            let target = bellman_apply(&mdp, 1, &g).expect("shapes");
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..4.0)).collect();
            let grad = population_gradient(mu.masses(), &f, &target);
            let eps = 1e-5;
            (0..n)
                .map(|i| {
                    let mut up = f.clone();
                    up[i] += eps;
                    let mut down = f.clone();
                    down[i] -= eps;
                    let fd = (population_loss(mu.masses(), &up, &target)
                        - population_loss(mu.masses(), &down, &target))
                        / (2.0 * eps);
                    // massless atoms have zero gradient; the floor keeps them finite
                    (fd - grad[i]).abs() / grad[i].abs().max(1e-8)
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Check {
        name: "gradient vs finite differences",
        passed: worst <= FD_REL_TOL,
        worst,
        detail: format!("{instances} instances, max relative error = {worst:.3e}"),
    }
}

pub fn check_bound(instances: u64) -> Check {
    let results: Vec<(bool, bool, f64)> = (0..instances)
        .into_par_iter()
        .map(|seed| {
            let (mdp, mut rng) = random_instance(seed);
            let f = random_q(&mut rng, &mdp);
            let r = suboptimality_check(&mdp, &f).expect("shapes");
            let mut ok = r.gap <= r.bound;
            let mut slack = r.bound - r.gap;
            for s in 0..mdp.states() {
                let r = suboptimality_check_from(&mdp, &f, s).expect("state in range");
                ok &= r.gap <= r.bound;
                slack = slack.min(r.bound - r.gap);
            }
            let exact = suboptimality_check(&mdp, &optimal_q(&mdp)).expect("shapes");
            (ok, exact.gap == 0.0 && exact.bound == 0.0, slack)
        })
        .collect();
    let held = results.iter().filter(|r| r.0).count();
    let tight = results.iter().all(|r| r.1);
    let worst = results.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    Check {
        name: "suboptimality bound",
        passed: held as u64 == instances && tight,
        worst,
        detail: format!(
            "gap <= bound on {held}/{instances} MDPs, min slack {worst:.3e}, zero at Q*: {tight}"
        ),
    }
}

const FQI_SHAPES: [(usize, usize, usize); 4] = [(3, 2, 3), (4, 2, 4), (5, 3, 4), (2, 2, 2)];

/// FQI instance `i`: MDP shape cycles through a fixed list; the SWD
/// counterfactual uses `T = H` steps and `w_min = 0.1`.
pub fn fqi_instance(i: u64, rounds: usize) -> plastic_replay_core::theory::FqiRun {
    let (s, a, h) = FQI_SHAPES[i as usize % FQI_SHAPES.len()];
    let mdp = random_mdp(i, s, a, h).expect("positive sizes");
    let sched = DecaySchedule::linear(h as u64, 0.1).expect("valid schedule");
    fqi_run(
        &mdp,
        rounds,
        Some(&sched),
        &FqiConfig {
            seed: i,
            ..Default::default()
        },
    )
    .expect("valid run")
}

/// Least-squares slope of `ln ||grad||` against `ln k` over `k >= 16`.
pub fn decay_slope(trace: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = trace
        .iter()
        .enumerate()
        .map(|(i, g)| (i + 1, g))
        .filter(|(k, _)| *k >= 16)
        .map(|(k, g)| ((k as f64).ln(), g.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Fraction of rounds `k > K/2` where the weighted learner's gradient norm
/// beats the uniform learner's.
pub fn swd_win_fraction(uniform: &[f64], swd: &[f64]) -> f64 {
    let half = uniform.len() / 2;
    let late = uniform.len() - half;
    let wins = uniform[half..]
        .iter()
        .zip(&swd[half..])
        .filter(|(u, s)| s > u)
        .count();
    wins as f64 / late as f64
}

/// Decay slope and SWD restoration share the same FQI runs.
pub fn check_fqi(instances: u64, rounds: usize) -> (Check, Check) {
    let stats: Vec<(f64, f64)> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let run = fqi_instance(i, rounds);
            let uniform = run.uniform_trace();
            let swd = run.swd_trace().expect("weighting was given");
            (decay_slope(&uniform), swd_win_fraction(&uniform, &swd))
        })
        .collect();
    let slopes: Vec<String> = stats.iter().map(|s| format!("{:.3}", s.0)).collect();
    let wins: Vec<String> = stats.iter().map(|s| format!("{:.3}", s.1)).collect();
    let slope_ok = stats
        .iter()
        .all(|s| (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&s.0));
    let worst_slope = stats
        .iter()
        .map(|s| s.0)
        .max_by(|a, b| (a + 1.0).abs().total_cmp(&(b + 1.0).abs()))
        .unwrap_or(f64::NAN);
    let worst_win = stats.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    (
        Check {
            name: "gradient decay slope",
            passed: slope_ok,
            worst: worst_slope,
            detail: format!("K = {rounds}, slopes [{}]", slopes.join(", ")),
        },
        Check {
            name: "decay-weighted gradient restoration",
            passed: stats.iter().all(|s| s.1 >= SWD_WIN_FRACTION),
            worst: worst_win,
            detail: format!("late-round win fractions [{}]", wins.join(", ")),
        },
    )
}

pub fn cmd_verify(opts: VerifyOptions) -> Vec<Check> {
    let sizes = if opts.quick {
        Sizes::quick()
    } else {
        Sizes::full()
    };
    let (slope, swd) = check_fqi(sizes.fqi_instances, sizes.fqi_rounds);
    vec![
        check_recursion(sizes.recursion_visits),
        check_loss_decomposition(sizes.loss_instances),
        check_gradient_identity(sizes.identity_instances, opts.mutation),
        check_gradient_fd(sizes.fd_instances),
        check_bound(sizes.bound_instances),
        slope,
        swd,
    ]
}

pub fn render_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for c in checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{status}  {:<width$}  {}", c.name, c.detail);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let trace: Vec<f64> = (1..=200).map(|k| 3.0 / k as f64).collect();
        assert!((decay_slope(&trace) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn win_fraction_uses_second_half() {
        assert_eq!(
            swd_win_fraction(&[1.0, 1.0, 1.0, 1.0], &[0.0, 0.0, 2.0, 0.5]),
            0.5
        );
    }

    #[test]
    fn mutation_breaks_identity() {
        assert!(check_gradient_identity(3, None).passed);
        let broken = check_gradient_identity(3, Some(Mutation::DropInverseK));
        assert!(!broken.passed && broken.worst > 1e-3);
    }
}
