use alloc::vec::Vec;

use super::distribution::EmpiricalDistribution;
use super::qfunc::{bellman_apply, max_values, TabularQ};
use crate::envs::TabularMDP;
use crate::{Error, Result};

fn check(mu: &EmpiricalDistribution, f: &[f64], mdp: &TabularMDP) -> Result<()> {
    let n = mdp.states() * mdp.actions();
    if mu.atoms() != n {
        return Err(Error::Shape {
            expected: n,
            got: mu.atoms(),
        });
    }
    if f.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: f.len(),
        });
    }
    Ok(())
}

/// Returns `(E_mu[(f - T_h g)^2], E_mu[Var_{s'}(max_a' g_{h+1}(s', a'))])`.
pub fn population_loss_decomposition(
    mu: &EmpiricalDistribution,
    mdp: &TabularMDP,
    h: usize,
    f: &[f64],
    g: &TabularQ,
) -> Result<(f64, f64)> {
    check(mu, f, mdp)?;
    let t = bellman_apply(mdp, h, g)?;
    let v = max_values(g, h + 1);
    let mut residual = 0.0;
    let mut variance = 0.0;
    for s in 0..mdp.states() {
        for a in 0..mdp.actions() {
            let i = s * mdp.actions() + a;
            let m = mu.masses()[i];
            if m == 0.0 {
                continue;
            }
            let row = mdp.transition(h, s, a);
            let mean: f64 = row.iter().zip(&v).map(|(p, x)| p * x).sum();
            let var: f64 = row
                .iter()
                .zip(&v)
                .map(|(p, x)| p * (x - mean) * (x - mean))
                .sum();
            residual += m * (f[i] - t[i]) * (f[i] - t[i]);
            variance += m * var;
        }
    }
    Ok((residual, variance))
}

/// `E_{(s,a)~mu, s'~P_h}[(f(s,a) - r_h(s,a) - max_a' g_{h+1}(s', a'))^2]`
/// by summing over every `(s, a, s')`.
pub fn expected_loss_enumerated(
    mu: &EmpiricalDistribution,
    mdp: &TabularMDP,
    h: usize,
    f: &[f64],
    g: &TabularQ,
) -> Result<f64> {
    check(mu, f, mdp)?;
    g.check_against(mdp)?;
    let v = max_values(g, h + 1);
    let mut total = 0.0;
    for s in 0..mdp.states() {
        for a in 0..mdp.actions() {
            let i = s * mdp.actions() + a;
            let r = mdp.reward(h, s, a);
            for (sp, p) in mdp.transition(h, s, a).iter().enumerate() {
                let e = f[i] - r - v[sp];
                total += mu.masses()[i] * p * e * e;
            }
        }
    }
    Ok(total)
}

/// `E_mu[(f - target)^2]` for a fixed per-atom target.
pub fn population_loss(masses: &[f64], f: &[f64], target: &[f64]) -> f64 {
    masses
        .iter()
        .zip(f)
        .zip(target)
        .map(|((m, x), t)| m * (x - t) * (x - t))
        .sum()
}

/// Closed-form gradient of [`population_loss`] in `f`: `2 mu (f - target)`.
pub fn population_gradient(masses: &[f64], f: &[f64], target: &[f64]) -> Vec<f64> {
    masses
        .iter()
        .zip(f)
        .zip(target)
        .map(|((m, x), t)| 2.0 * m * (x - t))
        .collect()
}
