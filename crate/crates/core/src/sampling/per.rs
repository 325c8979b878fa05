use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::SumTree;
use crate::{Error, Result};

/// Prioritized replay hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerConfig {
    pub alpha: f64,
    /// Initial importance-sampling exponent.
    pub beta: f64,
    pub beta_increment: f64,
    pub epsilon: f64,
}

impl Default for PerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.6,
            beta: 0.4,
            beta_increment: 1e-4,
            epsilon: 1e-6,
        }
    }
}

impl PerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.alpha) || !unit(self.beta) {
            return Err(Error::Config(format!(
                "alpha and beta must lie in [0, 1], got {} and {}",
                self.alpha, self.beta
            )));
        }
        if !(self.beta_increment >= 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::Config(
                "beta increment must be >= 0 and epsilon > 0".into(),
            ));
        }
        Ok(())
    }

    /// Annealed exponent after `steps` sampling calls.
    pub fn beta_at(&self, steps: u64) -> f64 {
        f64::min(1.0, self.beta + steps as f64 * self.beta_increment)
    }

    #[inline]
    pub fn priority(&self, td_error: f64) -> f64 {
        libm::pow(td_error.abs() + self.epsilon, self.alpha)
    }
}

/// Priorities `(|d| + eps)^alpha` and max-normalized IS weights
/// `(1 / (N P(i)))^beta / max_j (1 / (N P(j)))^beta`.
pub fn per_priorities_and_weights(
    td_errors: &[f64],
    cfg: &PerConfig,
    n: usize,
    probs: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Config("buffer size must be positive".into()));
    }
    if probs.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::Domain(
            "sampling probabilities must be positive".into(),
        ));
    }
    let priorities = td_errors.iter().map(|&d| cfg.priority(d)).collect();
    let raw: Vec<f64> = probs
        .iter()
        .map(|&p| libm::pow(1.0 / (n as f64 * p), cfg.beta))
        .collect();
    let max = raw.iter().copied().fold(f64::MIN, f64::max);
    let weights = raw.into_iter().map(|w| w / max).collect();
    Ok((priorities, weights))
}

/// Proportional prioritized replay over buffer slots.
#[derive(Debug, Clone)]
pub struct PrioritizedSampler {
    cfg: PerConfig,
    tree: SumTree,
    max_priority: f64,
    steps: u64,
}

impl PrioritizedSampler {
    pub fn new(cfg: PerConfig, capacity: usize) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            tree: SumTree::new(capacity),
            max_priority: 1.0,
            steps: 0,
        })
    }

    pub fn config(&self) -> &PerConfig {
        &self.cfg
    }

    pub fn current_beta(&self) -> f64 {
        self.cfg.beta_at(self.steps)
    }

    pub fn tree(&self) -> &SumTree {
        &self.tree
    }

    /// New transitions enter at the highest priority seen so far.
    pub fn on_insert(&mut self, slot: usize) -> Result<()> {
        self.tree.update(slot, self.max_priority)
    }

    /// Draws `batch` slots and their IS weights, then advances beta annealing.
    pub fn sample<R: Rng + ?Sized>(
        &mut self,
        len: usize,
        batch: usize,
        rng: &mut R,
    ) -> Result<(Vec<usize>, Vec<f64>)> {
        if len == 0 {
            return Err(Error::EmptyBuffer);
        }
        let total = self.tree.total();
        let mut indices = Vec::with_capacity(batch);
        let mut probs = Vec::with_capacity(batch);
        for _ in 0..batch {
            let u = rng.random::<f64>() * total;
            let slot = self.tree.find_prefix(u.min(total * (1.0 - f64::EPSILON)))?;
            indices.push(slot);
            probs.push(self.tree.get(slot) / total);
        }
        let cfg = PerConfig {
            beta: self.current_beta(),
            ..self.cfg
        };
        let (_, weights) = per_priorities_and_weights(&[], &cfg, len, &probs)?;
        self.steps += 1;
        Ok((indices, weights))
    }

    pub fn update_priorities(&mut self, slots: &[usize], td_errors: &[f64]) -> Result<()> {
        if slots.len() != td_errors.len() {
            return Err(Error::Shape {
                expected: slots.len(),
                got: td_errors.len(),
            });
        }
        for (&slot, &d) in slots.iter().zip(td_errors) {
            let p = self.cfg.priority(d);
            self.max_priority = self.max_priority.max(p);
            self.tree.update(slot, p)?;
        }
        Ok(())
    }
}
