//! Desk-scale environments.

mod chain;
mod tabular;

pub use chain::{NonstationaryChain, LEFT, RIGHT};
pub(crate) use tabular::sample_index;
pub use tabular::{random_mdp, TabularMDP};

use alloc::vec::Vec;
use rand::Rng;

/// Episodic environment driven by the global step counter.
pub trait Environment {
    type State: Clone;

    fn observation_dim(&self) -> usize;
    fn num_actions(&self) -> usize;
    /// Episodes are cut (without a terminal flag) after this many steps.
    fn max_episode_steps(&self) -> usize;
    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;
    fn observe(&self, state: &Self::State) -> Vec<f64>;
    /// Returns `(next_state, reward, done)`.
    fn step<R: Rng + ?Sized>(
        &self,
        global_step: u64,
        state: &Self::State,
        action: usize,
        rng: &mut R,
    ) -> (Self::State, f64, bool);
}
