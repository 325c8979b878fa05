use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::distribution::{atom, EmpiricalDistribution};
use super::loss::population_gradient;
use super::qfunc::{bellman_apply, TabularQ};
use crate::envs::TabularMDP;
use crate::{Error, Result};

/// Largest tolerated gradient of the previous round's loss at `f_prev`.
pub const MINIMIZER_TOLERANCE: f64 = 1e-9;

/// Initial gradient of the round-`k` loss split into the distributional
/// shift and target drift parts, one entry per state-action atom.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientDecomposition {
    pub lhs: Vec<f64>,
    pub dist_shift_term: Vec<f64>,
    pub target_drift_term: Vec<f64>,
}

impl GradientDecomposition {
    /// `max |lhs - (dist_shift + target_drift)|`.
    pub fn max_residual(&self) -> f64 {
        self.lhs
            .iter()
            .zip(&self.dist_shift_term)
            .zip(&self.target_drift_term)
            .map(|((l, d), t)| (l - (d + t)).abs())
            .fold(0.0, f64::max)
    }

    pub fn lhs_norm(&self) -> f64 {
        super::l2_norm(&self.lhs)
    }
}

fn check_minimizer(grad: &[f64]) -> Result<()> {
    let worst = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if !(worst <= MINIMIZER_TOLERANCE) {
        return Err(Error::Violated(format!(
            "f_prev is not a minimizer of the previous loss (|grad| = {worst:e})"
        )));
    }
    Ok(())
}

/// Population form: targets are exact Bellman backups under the model.
///
/// `d_hat` is the atom visited in round `k`, i.e. `mu_k` is the measure
/// after that visit.
#[allow(clippy::too_many_arguments)]
pub fn initial_gradient_decomposition(
    mu_k: &EmpiricalDistribution,
    d_hat: usize,
    mdp: &TabularMDP,
    h: usize,
    f_prev: &[f64],
    f_next_prev: &TabularQ,
    f_next_cur: &TabularQ,
    k: u64,
) -> Result<GradientDecomposition> {
    let n = mdp.states() * mdp.actions();
    if mu_k.atoms() != n || f_prev.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: f_prev.len().min(mu_k.atoms()),
        });
    }
    if k == 0 || mu_k.count() != k {
        return Err(Error::Config(format!(
            "measure holds {} visits, expected k = {k}",
            mu_k.count()
        )));
    }
    if d_hat >= n || mu_k.masses()[d_hat] == 0.0 {
        return Err(Error::Config("d_hat must be a visited atom".into()));
    }
    let t_prev = bellman_apply(mdp, h, f_next_prev)?;
    let t_cur = bellman_apply(mdp, h, f_next_cur)?;
    if let Some(prev) = mu_k.previous_masses(d_hat) {
        check_minimizer(&population_gradient(&prev, f_prev, &t_prev))?;
    }

    let mu = mu_k.masses();
    let lhs = population_gradient(mu, f_prev, &t_cur);
    let kf = k as f64;
    let dist_shift_term = (0..n)
        .map(|i| {
            if i == d_hat {
                2.0 * (f_prev[i] - t_prev[i]) / kf
            } else {
                0.0
            }
        })
        .collect();
    let target_drift_term = (0..n)
        .map(|i| 2.0 * mu[i] * (t_prev[i] - t_cur[i]))
        .collect();
    Ok(GradientDecomposition {
        lhs,
        dist_shift_term,
        target_drift_term,
    })
}

/// One observed transition at a fixed step `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

impl Sample {
    /// Regression target `r + max_a' g_{h+1}(s', a')`.
    pub fn target(&self, g: &TabularQ, h: usize) -> f64 {
        self.reward + g.max_value(h + 1, self.next_state)
    }
}

/// Per-atom weighted target sums and weight totals.
fn weighted_targets(
    samples: &[Sample],
    weights: Option<&[f64]>,
    g: &TabularQ,
    h: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = g.states() * g.actions();
    let mut sums = vec![0.0; n];
    let mut mass = vec![0.0; n];
    for (j, x) in samples.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[j]);
        let i = atom(x.state, x.action, g.actions());
        sums[i] += w * x.target(g, h);
        mass[i] += w;
    }
    (sums, mass)
}

fn fit_from(sums: &[f64], mass: &[f64], base: &[f64]) -> Vec<f64> {
    sums.iter()
        .zip(mass)
        .zip(base)
        .map(|((s, m), b)| if *m > 0.0 { s / m } else { *b })
        .collect()
}

/// Minimizer of the empirical squared loss: the per-atom mean target.
/// Atoms without data keep their `base` value.
pub fn empirical_fit(samples: &[Sample], g: &TabularQ, h: usize, base: &[f64]) -> Vec<f64> {
    let (sums, mass) = weighted_targets(samples, None, g, h);
    fit_from(&sums, &mass, base)
}

/// Minimizer of the sample-weighted squared loss.
pub fn weighted_fit(
    samples: &[Sample],
    weights: &[f64],
    g: &TabularQ,
    h: usize,
    base: &[f64],
) -> Vec<f64> {
    let (sums, mass) = weighted_targets(samples, Some(weights), g, h);
    fit_from(&sums, &mass, base)
}

/// Gradient at `f` of `sum_j w_j (f(s_j, a_j) - y_j)^2 / sum_j w_j`.
pub fn weighted_gradient(
    samples: &[Sample],
    weights: &[f64],
    g: &TabularQ,
    h: usize,
    f: &[f64],
) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut grad = vec![0.0; f.len()];
    for (x, w) in samples.iter().zip(weights) {
        let i = atom(x.state, x.action, g.actions());
        grad[i] += 2.0 * (w / total) * (f[i] - x.target(g, h));
    }
    grad
}

/// Sample form of [`initial_gradient_decomposition`]: the loss is the mean
/// squared error against observed targets `r + max g(s')`, so `mu_k` must be
/// the frequency measure of `samples` (whose last entry is this round's
/// visit) and `f_prev` the minimizer over all but the last sample.
pub fn empirical_gradient_decomposition(
    mu_k: &EmpiricalDistribution,
    samples: &[Sample],
    h: usize,
    f_prev: &[f64],
    f_next_prev: &TabularQ,
    f_next_cur: &TabularQ,
) -> Result<GradientDecomposition> {
    let n = f_next_prev.states() * f_next_prev.actions();
    if mu_k.atoms() != n || f_prev.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: f_prev.len().min(mu_k.atoms()),
        });
    }
    let k = samples.len();
    if k == 0 || mu_k.count() != k as u64 {
        return Err(Error::Config(format!(
            "measure holds {} visits but {k} samples were given",
            mu_k.count()
        )));
    }
    let last = samples[k - 1];
    let d_hat = atom(last.state, last.action, f_next_prev.actions());
    if k >= 2 {
        let prev = mu_k
            .previous_masses(d_hat)
            .ok_or_else(|| Error::Config("measure does not contain the last sample".into()))?;
        let (sums, mass) = weighted_targets(&samples[..k - 1], None, f_next_prev, h);
        let y_prev = fit_from(&sums, &mass, f_prev);
        check_minimizer(&population_gradient(&prev, f_prev, &y_prev))?;
    }

    let (sums, mass) = weighted_targets(samples, None, f_next_prev, h);
    let y_prev = fit_from(&sums, &mass, f_prev);
    let (sums, mass) = weighted_targets(samples, None, f_next_cur, h);
    let y_cur = fit_from(&sums, &mass, f_prev);

    let mu = mu_k.masses();
    let kf = k as f64;
    let lhs = population_gradient(mu, f_prev, &y_cur);
    let last_target = last.target(f_next_prev, h);
    let dist_shift_term = (0..n)
        .map(|i| {
            if i == d_hat {
                2.0 * (f_prev[i] - last_target) / kf
            } else {
                0.0
            }
        })
        .collect();
    let target_drift_term = (0..n)
        .map(|i| 2.0 * mu[i] * (y_prev[i] - y_cur[i]))
        .collect();
    Ok(GradientDecomposition {
        lhs,
        dist_shift_term,
        target_drift_term,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::random_mdp;

    #[test]
    fn last_step_has_no_drift() {
        let mdp = random_mdp(2, 3, 2, 3).unwrap();
        let mut mu = EmpiricalDistribution::point_mass(6, 1).unwrap();
        let zeros = TabularQ::for_mdp(&mdp);
        let t = bellman_apply(&mdp, 3, &zeros).unwrap();
        let mut f = vec![0.7; 6];
        f[1] = t[1];
        mu.update(4).unwrap();
        let a = TabularQ::from_fn(3, 2, 3, |h, s, a| (h + s + a) as f64);
        let b = TabularQ::from_fn(3, 2, 3, |h, s, a| (h * s + a) as f64 * 0.5);
        let d = initial_gradient_decomposition(&mu, 4, &mdp, 3, &f, &a, &b, 2).unwrap();
        assert!(d.target_drift_term.iter().all(|&x| x == 0.0));
        assert!(d.max_residual() < 1e-12);
    }

    #[test]
    fn zero_residual_atom_has_no_shift() {
        let mdp = random_mdp(5, 2, 2, 2).unwrap();
        let g = TabularQ::from_fn(2, 2, 2, |_, s, a| (s + 2 * a) as f64);
        let t = bellman_apply(&mdp, 1, &g).unwrap();
        let mut mu = EmpiricalDistribution::point_mass(4, 0).unwrap();
        mu.update(0).unwrap();
        let d = initial_gradient_decomposition(&mu, 0, &mdp, 1, &t, &g, &g, 2).unwrap();
        assert!(d.dist_shift_term.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn non_minimizer_is_rejected() {
        let mdp = random_mdp(5, 2, 2, 2).unwrap();
        let g = TabularQ::for_mdp(&mdp);
        let mut mu = EmpiricalDistribution::point_mass(4, 0).unwrap();
        mu.update(1).unwrap();
        let f = vec![9.0; 4];
        let r = initial_gradient_decomposition(&mu, 1, &mdp, 2, &f, &g, &g, 2);
        assert!(matches!(r, Err(Error::Violated(_))));
    }

    #[test]
    fn empirical_identity_and_uniform_weights() {
        let g0 = TabularQ::from_fn(2, 2, 2, |_, s, a| (s * 2 + a) as f64 * 0.3);
        let g1 = TabularQ::from_fn(2, 2, 2, |_, s, a| (s + a) as f64 * 0.4);
        let samples = [
            Sample {
                state: 0,
                action: 1,
                reward: 0.2,
                next_state: 1,
            },
            Sample {
                state: 1,
                action: 0,
                reward: 0.9,
                next_state: 0,
            },
            Sample {
                state: 0,
                action: 1,
                reward: 0.4,
                next_state: 0,
            },
        ];
        let mut mu = EmpiricalDistribution::new(4);
        for x in &samples {
            mu.update(atom(x.state, x.action, 2)).unwrap();
        }
        let f_prev = empirical_fit(&samples[..2], &g0, 1, &[0.0; 4]);
        let d = empirical_gradient_decomposition(&mu, &samples, 1, &f_prev, &g0, &g1).unwrap();
        assert!(d.max_residual() < 1e-15);
        let w = weighted_gradient(&samples, &[1.0; 3], &g1, 1, &f_prev);
        for (a, b) in w.iter().zip(&d.lhs) {
            assert!((a - b).abs() < 1e-15);
        }
        let bad = empirical_gradient_decomposition(&mu, &samples, 1, &[5.0; 4], &g0, &g1);
        assert!(matches!(bad, Err(Error::Violated(_))));
    }
}
