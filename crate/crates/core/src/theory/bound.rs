use alloc::vec;
use alloc::vec::Vec;

use super::qfunc::{backup, bellman_apply, TabularQ};
use crate::envs::TabularMDP;
use crate::{Error, Result};

/// Value gap of the greedy policy and its squared-residual bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Suboptimality {
    /// `V*_1 - V^{pi_f}_1` from the start distribution.
    pub gap: f64,
    /// `sqrt(H) (sqrt(E_{pi*} sum_h D_h) + sqrt(E_{pi_f} sum_h D_h))`.
    pub bound: f64,
    pub residual_optimal: f64,
    pub residual_greedy: f64,
}

impl Suboptimality {
    pub fn holds(&self) -> bool {
        self.gap <= self.bound
    }
}

/// `Q*` by backward induction.
pub fn optimal_q(mdp: &TabularMDP) -> TabularQ {
    let mut q = TabularQ::for_mdp(mdp);
    for h in (1..=mdp.horizon()).rev() {
        let t = bellman_apply(mdp, h, &q).expect("shapes match by construction");
        q.step_mut(h).copy_from_slice(&t);
    }
    q
}

/// `V^pi_h` for the deterministic policy `pi_h(s)`, steps `1..=H+1`.
pub fn policy_value(mdp: &TabularMDP, policy: impl Fn(usize, usize) -> usize) -> Vec<Vec<f64>> {
    let horizon = mdp.horizon();
    let mut v = vec![vec![0.0; mdp.states()]; horizon + 1];
    for h in (1..=horizon).rev() {
        for s in 0..mdp.states() {
            v[h - 1][s] = backup(mdp, h, s, policy(h, s), &v[h]);
        }
    }
    v
}

/// `E_pi[sum_h D_h(s_h, a_h)]` by forward propagation of state marginals.
fn expected_residual(
    mdp: &TabularMDP,
    start: &[f64],
    policy: impl Fn(usize, usize) -> usize,
    residuals: &[Vec<f64>],
) -> f64 {
    let mut d = start.to_vec();
    let mut total = 0.0;
    for h in 1..=mdp.horizon() {
        let mut next = vec![0.0; mdp.states()];
        for s in 0..mdp.states() {
            if d[s] == 0.0 {
                continue;
            }
            let a = policy(h, s);
            total += d[s] * residuals[h - 1][s * mdp.actions() + a];
            for (sp, p) in mdp.transition(h, s, a).iter().enumerate() {
                next[sp] += d[s] * p;
            }
        }
        d = next;
    }
    total
}

fn check_from_distribution(mdp: &TabularMDP, f: &TabularQ, start: &[f64]) -> Result<Suboptimality> {
    f.check_against(mdp)?;
    if !f.is_finite() {
        return Err(Error::Domain("Q-function has non-finite entries".into()));
    }
    let q_star = optimal_q(mdp);
    let star = |h: usize, s: usize| q_star.greedy(h, s);
    let greedy = |h: usize, s: usize| f.greedy(h, s);

    let v_star = policy_value(mdp, star);
    let v_hat = policy_value(mdp, greedy);
    let gap: f64 = start
        .iter()
        .enumerate()
        .map(|(s, p)| p * (v_star[0][s] - v_hat[0][s]))
        .sum();

    let residuals: Vec<Vec<f64>> = (1..=mdp.horizon())
        .map(|h| {
            let t = bellman_apply(mdp, h, f).expect("shapes checked");
            f.step(h)
                .iter()
                .zip(&t)
                .map(|(x, y)| (x - y) * (x - y))
                .collect()
        })
        .collect();
    let residual_optimal = expected_residual(mdp, start, star, &residuals);
    let residual_greedy = expected_residual(mdp, start, greedy, &residuals);
    let bound = libm::sqrt(mdp.horizon() as f64)
        * (libm::sqrt(residual_optimal) + libm::sqrt(residual_greedy));
    Ok(Suboptimality {
        gap,
        bound,
        residual_optimal,
        residual_greedy,
    })
}

/// Gap and bound averaged over the MDP's initial distribution.
pub fn suboptimality_check(mdp: &TabularMDP, f_hats: &TabularQ) -> Result<Suboptimality> {
    check_from_distribution(mdp, f_hats, mdp.initial())
}

/// Gap and bound from a fixed start state.
pub fn suboptimality_check_from(
    mdp: &TabularMDP,
    f_hats: &TabularQ,
    start: usize,
) -> Result<Suboptimality> {
    if start >= mdp.states() {
        return Err(Error::OutOfBounds {
            index: start,
            len: mdp.states(),
        });
    }
    let mut d = vec![0.0; mdp.states()];
    d[start] = 1.0;
    check_from_distribution(mdp, f_hats, &d)
}
