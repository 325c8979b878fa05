//! Age-weighted experience replay and the machinery to study it.
//!
//! The crate is `no_std` (it needs `alloc`) and contains no IO. It provides:
//!
//! * [`replay`]: a fixed-capacity ring buffer of timestamped transitions.
//! * [`sampling`]: uniform, sample-weight-decay (exact and bucketed),
//!   weight-augmentation, exponential/polynomial decay and prioritized replay.
//! * [`nn`]: a small MLP with exact parameter and pre-activation gradients, plus Adam.
//! * [`grama`]: gradient-magnitude neuron activity scores.
//! * [`envs`]: random tabular MDPs and a reward-flipping chain.
//! * [`agent`]: a Double-DQN style learner wired to any sampler.
//! * [`theory`]: exact tabular checks of fitted Q-iteration identities and bounds.
//! * [`stats`]: interquartile mean and stratified bootstrap intervals.
#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod agent;
pub mod envs;
mod error;
pub mod grama;
pub mod nn;
pub mod replay;
pub mod sampling;
pub mod seeding;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
