use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::Exp1;

use crate::seeding;
use crate::{Error, Result};

/// Finite-horizon tabular MDP with step-dependent dynamics and rewards.
///
/// Steps are numbered `1..=H` as in the usual episodic notation; the
/// terminal value at `H + 1` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMDP {
    states: usize,
    actions: usize,
    horizon: usize,
    /// `[h][s][a][s']`, flattened.
    transitions: Vec<f64>,
    /// `[h][s][a]`, flattened.
    rewards: Vec<f64>,
    initial: Vec<f64>,
}

fn check_distribution(row: &[f64], what: &str) -> Result<()> {
    let sum: f64 = row.iter().sum();
    if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("{what} is not a probability vector")));
    }
    Ok(())
}

impl TabularMDP {
    pub fn new(
        states: usize,
        actions: usize,
        horizon: usize,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        if states == 0 || actions == 0 || horizon == 0 {
            return Err(Error::Config("MDP sizes must be positive".into()));
        }
        let sa = states * actions;
        if transitions.len() != horizon * sa * states {
            return Err(Error::Shape {
                expected: horizon * sa * states,
                got: transitions.len(),
            });
        }
        if rewards.len() != horizon * sa {
            return Err(Error::Shape {
                expected: horizon * sa,
                got: rewards.len(),
            });
        }
        if initial.len() != states {
            return Err(Error::Shape {
                expected: states,
                got: initial.len(),
            });
        }
        for row in transitions.chunks(states) {
            check_distribution(row, "transition row")?;
        }
        check_distribution(&initial, "initial distribution")?;
        if rewards.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::Domain("rewards must lie in [0, 1]".into()));
        }
        Ok(Self {
            states,
            actions,
            horizon,
            transitions,
            rewards,
            initial,
        })
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

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    #[inline]
    fn sa(&self, h: usize, s: usize, a: usize) -> usize {
        debug_assert!((1..=self.horizon).contains(&h));
        ((h - 1) * self.states + s) * self.actions + a
    }

    /// `P_h(. | s, a)`.
    #[inline]
    pub fn transition(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let i = self.sa(h, s, a) * self.states;
        &self.transitions[i..i + self.states]
    }

    #[inline]
    pub fn reward(&self, h: usize, s: usize, a: usize) -> f64 {
        self.rewards[self.sa(h, s, a)]
    }

    /// Samples `(s', r, done)`; `done` is set on the last step `h = H`.
    pub fn step<R: Rng + ?Sized>(
        &self,
        h: usize,
        s: usize,
        a: usize,
        rng: &mut R,
    ) -> Result<(usize, f64, bool)> {
        if !(1..=self.horizon).contains(&h) {
            return Err(Error::OutOfBounds {
                index: h,
                len: self.horizon + 1,
            });
        }
        if s >= self.states {
            return Err(Error::OutOfBounds {
                index: s,
                len: self.states,
            });
        }
        if a >= self.actions {
            return Err(Error::OutOfBounds {
                index: a,
                len: self.actions,
            });
        }
        let next = sample_index(self.transition(h, s, a), rng);
        Ok((next, self.reward(h, s, a), h == self.horizon))
    }
}

/// Inverse-CDF draw from a probability vector.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the accumulated mass: take the last supported index
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn dirichlet_one<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    // normalized unit exponentials are Dirichlet(1, ..., 1)
    let e: Vec<f64> = (0..n).map(|_| rng.sample(Exp1)).collect();
    let total: f64 = e.iter().sum();
    if total > 0.0 {
        e.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / n as f64; n]
    }
}

/// Random MDP: Dirichlet(1) transition rows, rewards uniform in `[0, 1)`,
/// uniform initial state.
pub fn random_mdp(seed: u64, states: usize, actions: usize, horizon: usize) -> Result<TabularMDP> {
    if states == 0 || actions == 0 || horizon == 0 {
        return Err(Error::Config("MDP sizes must be positive".into()));
    }
    let mut rng = seeding::stream(seed, "random_mdp", 0);
    let rows = horizon * states * actions;
    let mut transitions = Vec::with_capacity(rows * states);
    for _ in 0..rows {
        transitions.extend(dirichlet_one(states, &mut rng));
    }
    let rewards = (0..rows).map(|_| rng.random::<f64>()).collect();
    let initial = vec![1.0 / states as f64; states];
    TabularMDP::new(states, actions, horizon, transitions, rewards, initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream;

    #[test]
    fn same_seed_same_mdp() {
        assert_eq!(
            random_mdp(4, 3, 2, 5).unwrap(),
            random_mdp(4, 3, 2, 5).unwrap()
        );
        assert_ne!(
            random_mdp(4, 3, 2, 5).unwrap(),
            random_mdp(5, 3, 2, 5).unwrap()
        );
    }

    #[test]
    fn single_state_self_loops() {
        let m = random_mdp(1, 1, 3, 4).unwrap();
        for h in 1..=4 {
            for a in 0..3 {
                assert_eq!(m.transition(h, 0, a), &[1.0]);
            }
        }
    }

    #[test]
    fn zero_sizes_rejected() {
        assert!(matches!(random_mdp(0, 0, 1, 1), Err(Error::Config(_))));
        assert!(matches!(random_mdp(0, 1, 0, 1), Err(Error::Config(_))));
        assert!(matches!(random_mdp(0, 1, 1, 0), Err(Error::Config(_))));
    }

    #[test]
    fn one_hot_row_is_deterministic() {
        let p = vec![0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let m = TabularMDP::new(
            3,
            1,
            4,
            [p.clone(), p.clone(), p.clone(), p].concat()[..36].to_vec(),
            vec![0.5; 12],
            vec![1.0, 0.0, 0.0],
        )
        .unwrap();
        let mut rng = stream(0, "det", 0);
        for _ in 0..100 {
            assert_eq!(m.step(1, 0, 0, &mut rng).unwrap().0, 1);
        }
    }

    #[test]
    fn horizon_sets_done() {
        let m = random_mdp(2, 2, 2, 3).unwrap();
        let mut rng = stream(0, "h", 0);
        assert!(!m.step(2, 0, 0, &mut rng).unwrap().2);
        assert!(m.step(3, 0, 0, &mut rng).unwrap().2);
        assert!(m.step(4, 0, 0, &mut rng).is_err());
        assert!(m.step(0, 0, 0, &mut rng).is_err());
        assert!(m.step(1, 2, 0, &mut rng).is_err());
        assert!(m.step(1, 0, 2, &mut rng).is_err());
    }

    #[test]
    fn rejects_bad_rows_and_rewards() {
        assert!(TabularMDP::new(
            2,
            1,
            1,
            vec![0.5, 0.6, 1.0, 0.0],
            vec![0.0, 0.0],
            vec![1.0, 0.0]
        )
        .is_err());
        assert!(TabularMDP::new(
            2,
            1,
            1,
            vec![0.5, 0.5, 1.0, 0.0],
            vec![1.5, 0.0],
            vec![1.0, 0.0]
        )
        .is_err());
    }
}
