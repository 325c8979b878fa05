use alloc::vec::Vec;

use rand::Rng;

use super::{
    sample_batch_exact, BucketedSampler, DecayKind, DecaySchedule, PerConfig, PrioritizedSampler,
};
use crate::replay::ReplayBuffer;
use crate::{Error, Result};

/// Which sampling rule a training run uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplerKind {
    Uniform,
    /// Exact age-weighted sampling under any decay law.
    Weighted(DecaySchedule),
    /// Bucketed approximation of age-weighted sampling.
    Bucketed {
        schedule: DecaySchedule,
        buckets: usize,
    },
    Prioritized(PerConfig),
}

impl SamplerKind {
    /// Short name used in file names and CSV columns.
    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::Uniform => "uniform",
            SamplerKind::Weighted(s) => match s.kind() {
                DecayKind::Linear => "swd",
                DecayKind::Swa => "swa",
                DecayKind::Exponential { .. } => "exp-decay",
                DecayKind::Polynomial { .. } => "poly-decay",
            },
            SamplerKind::Bucketed { .. } => "swd-bucketed",
            SamplerKind::Prioritized(_) => "per",
        }
    }
}

#[derive(Debug, Clone)]
enum State {
    Stateless,
    Bucketed(BucketedSampler),
    Prioritized(PrioritizedSampler),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledBatch {
    pub indices: Vec<usize>,
    /// Importance-sampling weights; only prioritized replay produces them.
    pub is_weights: Option<Vec<f64>>,
}

/// A sampling strategy together with whatever state it keeps between batches.
#[derive(Debug, Clone)]
pub struct Sampler {
    kind: SamplerKind,
    state: State,
}

impl Sampler {
    pub fn new(kind: SamplerKind, capacity: usize) -> Result<Self> {
        let state = match kind {
            SamplerKind::Uniform | SamplerKind::Weighted(_) => State::Stateless,
            SamplerKind::Bucketed { schedule, buckets } => {
                State::Bucketed(BucketedSampler::new(schedule, buckets)?)
            }
            SamplerKind::Prioritized(cfg) => {
                State::Prioritized(PrioritizedSampler::new(cfg, capacity)?)
            }
        };
        Ok(Self { kind, state })
    }

    pub fn kind(&self) -> &SamplerKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Must be called with the slot returned by every buffer push.
    pub fn on_push(&mut self, slot: usize) -> Result<()> {
        if let State::Prioritized(per) = &mut self.state {
            per.on_insert(slot)?;
        }
        Ok(())
    }

    pub fn sample<O, A, R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer<O, A>,
        now: u64,
        batch: usize,
        rng: &mut R,
    ) -> Result<SampledBatch> {
        let len = buffer.len();
        if len == 0 {
            return Err(Error::EmptyBuffer);
        }
        let (indices, is_weights) = match (&self.kind, &mut self.state) {
            (SamplerKind::Uniform, _) => {
                // floor(u * n) consumes the generator exactly like the
                // categorical sampler does with unit weights
                let idx = (0..batch)
                    .map(|_| ((rng.random::<f64>() * len as f64) as usize).min(len - 1))
                    .collect();
                (idx, None)
            }
            (SamplerKind::Weighted(schedule), _) => {
                (sample_batch_exact(buffer, schedule, now, batch, rng)?, None)
            }
            (_, State::Bucketed(b)) => (b.sample(buffer, now, batch, rng)?, None),
            (_, State::Prioritized(per)) => {
                let (idx, w) = per.sample(len, batch, rng)?;
                (idx, Some(w))
            }
            _ => unreachable!("sampler state always matches its kind"),
        };
        Ok(SampledBatch {
            indices,
            is_weights,
        })
    }

    /// Feeds fresh TD errors back; a no-op for everything but prioritized replay.
    pub fn update_priorities(&mut self, slots: &[usize], td_errors: &[f64]) -> Result<()> {
        if let State::Prioritized(per) = &mut self.state {
            per.update_priorities(slots, td_errors)?;
        }
        Ok(())
    }
}
