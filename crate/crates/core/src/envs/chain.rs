use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::Environment;
use crate::{Error, Result};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// Corridor whose end rewards swap sign at `shift_step`.
///
/// States are `0..length`; both ends are absorbing. Before the shift,
/// reaching the right end pays `+1` and the left end `-1`; afterwards the
/// signs are flipped. Interior moves pay nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonstationaryChain {
    length: usize,
    shift_step: u64,
    max_episode_steps: usize,
}

impl NonstationaryChain {
    pub fn new(length: usize, shift_step: u64, max_episode_steps: usize) -> Result<Self> {
        if length < 3 {
            return Err(Error::Config("chain length must be at least 3".into()));
        }
        if max_episode_steps == 0 {
            return Err(Error::Config("max_episode_steps must be positive".into()));
        }
        Ok(Self {
            length,
            shift_step,
            max_episode_steps,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn shift_step(&self) -> u64 {
        self.shift_step
    }

    pub fn start_state(&self) -> usize {
        self.length / 2
    }

    pub fn is_shifted(&self, global_step: u64) -> bool {
        global_step >= self.shift_step
    }

    /// Reward for entering the right end at `global_step`.
    pub fn right_reward(&self, global_step: u64) -> f64 {
        if self.is_shifted(global_step) {
            -1.0
        } else {
            1.0
        }
    }

    /// Deterministic transition: `(next_state, reward, done)`.
    pub fn chain_step(&self, global_step: u64, state: usize, action: usize) -> (usize, f64, bool) {
        debug_assert!(state > 0 && state + 1 < self.length);
        let next = if action == RIGHT {
            state + 1
        } else {
            state - 1
        };
        let right = self.right_reward(global_step);
        if next + 1 == self.length {
            (next, right, true)
        } else if next == 0 {
            (next, -right, true)
        } else {
            (next, 0.0, false)
        }
    }

    /// Best undiscounted episode return from the start state for a fixed
    /// reward regime, under the episode step limit. Backward induction over
    /// remaining steps.
    pub fn optimal_return(&self, shifted: bool) -> f64 {
        let right = if shifted { -1.0 } else { 1.0 };
        // value[s] with `t` steps remaining; ends are absorbing with value 0
        let mut value = vec![0.0; self.length];
        for _ in 0..self.max_episode_steps {
            let mut next = vec![0.0; self.length];
            for s in 1..self.length - 1 {
                let q = |n: usize| {
                    if n + 1 == self.length {
                        right
                    } else if n == 0 {
                        -right
                    } else {
                        value[n]
                    }
                };
                next[s] = f64::max(q(s - 1), q(s + 1));
            }
            value = next;
        }
        value[self.start_state()]
    }

    pub fn one_hot(&self, state: usize) -> Vec<f64> {
        let mut obs = vec![0.0; self.length];
        obs[state] = 1.0;
        obs
    }
}

impl Environment for NonstationaryChain {
    type State = usize;

    fn observation_dim(&self) -> usize {
        self.length
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn max_episode_steps(&self) -> usize {
        self.max_episode_steps
    }

    fn reset<R: Rng + ?Sized>(&self, _rng: &mut R) -> usize {
        self.start_state()
    }

    fn observe(&self, state: &usize) -> Vec<f64> {
        self.one_hot(*state)
    }

    fn step<R: Rng + ?Sized>(
        &self,
        global_step: u64,
        state: &usize,
        action: usize,
        _rng: &mut R,
    ) -> (usize, f64, bool) {
        self.chain_step(global_step, *state, action)
    }
}
