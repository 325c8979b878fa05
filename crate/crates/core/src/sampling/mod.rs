//! Replay sampling strategies.
//!
//! All strategies return physical slot indices of a [`ReplayBuffer`](crate::replay::ReplayBuffer)
//! and draw with replacement.

mod bucket;
mod categorical;
mod per;
mod schedule;
mod strategy;
mod sumtree;

pub use bucket::{bucket_rebuild, sample_batch_bucketed, BucketIndex, BucketedSampler};
pub use categorical::{
    exact_probabilities_logical, neumaier_sum, normalized_probabilities, sample_batch_exact,
    sample_categorical, schedule_weights, total_variation,
};
pub use per::{per_priorities_and_weights, PerConfig, PrioritizedSampler};
pub use schedule::{DecayKind, DecaySchedule};
pub use strategy::{SampledBatch, Sampler, SamplerKind};
pub use sumtree::SumTree;
