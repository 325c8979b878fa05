use alloc::vec;
use alloc::vec::Vec;

use crate::envs::TabularMDP;
use crate::{Error, Result};

/// Step-indexed tabular Q-function `f_1, ..., f_H`, with `f_{H+1} = 0`
/// stored but never writable.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularQ {
    states: usize,
    actions: usize,
    horizon: usize,
    values: Vec<f64>,
}

impl TabularQ {
    pub fn zeros(states: usize, actions: usize, horizon: usize) -> Self {
        Self {
            states,
            actions,
            horizon,
            values: vec![0.0; (horizon + 1) * states * actions],
        }
    }

    pub fn for_mdp(mdp: &TabularMDP) -> Self {
        Self::zeros(mdp.states(), mdp.actions(), mdp.horizon())
    }

    pub fn from_fn(
        states: usize,
        actions: usize,
        horizon: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut q = Self::zeros(states, actions, horizon);
        for h in 1..=horizon {
            for s in 0..states {
                for a in 0..actions {
                    q.values[((h - 1) * states + s) * actions + a] = f(h, s, a);
                }
            }
        }
        q
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Values at step `h`, `1 <= h <= H + 1`.
    pub fn step(&self, h: usize) -> &[f64] {
        assert!((1..=self.horizon + 1).contains(&h), "step {h} out of range");
        let n = self.states * self.actions;
        &self.values[(h - 1) * n..h * n]
    }

    /// Mutable values at step `h`, `1 <= h <= H`.
    pub fn step_mut(&mut self, h: usize) -> &mut [f64] {
        assert!((1..=self.horizon).contains(&h), "step {h} is not writable");
        let n = self.states * self.actions;
        &mut self.values[(h - 1) * n..h * n]
    }

    pub fn get(&self, h: usize, s: usize, a: usize) -> f64 {
        self.step(h)[s * self.actions + a]
    }

    /// `max_a f_h(s, a)`.
    pub fn max_value(&self, h: usize, s: usize) -> f64 {
        let row = &self.step(h)[s * self.actions..(s + 1) * self.actions];
        row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// First maximizing action.
    pub fn greedy(&self, h: usize, s: usize) -> usize {
        let row = &self.step(h)[s * self.actions..(s + 1) * self.actions];
        let mut best = 0;
        for a in 1..row.len() {
            if row[a] > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_against(&self, mdp: &TabularMDP) -> Result<()> {
        if self.states != mdp.states()
            || self.actions != mdp.actions()
            || self.horizon != mdp.horizon()
        {
            return Err(Error::Shape {
                expected: mdp.states() * mdp.actions() * mdp.horizon(),
                got: self.states * self.actions * self.horizon,
            });
        }
        Ok(())
    }
}

/// `r_h(s, a) + sum_{s'} P_h(s'|s, a) v(s')`.
#[inline]
pub(crate) fn backup(mdp: &TabularMDP, h: usize, s: usize, a: usize, v_next: &[f64]) -> f64 {
    let expected: f64 = mdp
        .transition(h, s, a)
        .iter()
        .zip(v_next)
        .map(|(p, v)| p * v)
        .sum();
    mdp.reward(h, s, a) + expected
}

pub(crate) fn max_values(g: &TabularQ, h: usize) -> Vec<f64> {
    (0..g.states()).map(|s| g.max_value(h, s)).collect()
}

/// `(T_h g)(s, a) = r_h(s, a) + E_{s'}[max_a' g_{h+1}(s', a')]` for all atoms.
pub fn bellman_apply(mdp: &TabularMDP, h: usize, g: &TabularQ) -> Result<Vec<f64>> {
    g.check_against(mdp)?;
    if !(1..=mdp.horizon()).contains(&h) {
        return Err(Error::OutOfBounds {
            index: h,
            len: mdp.horizon() + 1,
        });
    }
    let v = max_values(g, h + 1);
    let mut out = Vec::with_capacity(mdp.states() * mdp.actions());
    for s in 0..mdp.states() {
        for a in 0..mdp.actions() {
            out.push(backup(mdp, h, s, a, &v));
        }
    }
    Ok(out)
}
