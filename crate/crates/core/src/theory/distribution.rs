use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Flat index of the state-action pair `(s, a)`.
#[inline]
pub fn atom(state: usize, action: usize, actions: usize) -> usize {
    state * actions + action
}

/// Replay frequency measure over state-action atoms after `count` visits.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    masses: Vec<f64>,
    count: u64,
}

impl EmpiricalDistribution {
    /// Empty measure (no visits yet).
    pub fn new(atoms: usize) -> Self {
        Self {
            masses: vec![0.0; atoms],
            count: 0,
        }
    }

    pub fn point_mass(atoms: usize, at: usize) -> Result<Self> {
        let mut mu = Self::new(atoms);
        mu.update(at)?;
        Ok(mu)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn atoms(&self) -> usize {
        self.masses.len()
    }

    /// In-place `mu <- k/(k+1) mu + 1/(k+1) delta_visit`.
    pub fn update(&mut self, visit: usize) -> Result<()> {
        if visit >= self.masses.len() {
            return Err(Error::OutOfBounds {
                index: visit,
                len: self.masses.len(),
            });
        }
        let k = self.count as f64;
        let next = k + 1.0;
        for (i, m) in self.masses.iter_mut().enumerate() {
            let hit = if i == visit { 1.0 } else { 0.0 };
            *m = (k * *m + hit) / next;
        }
        self.count += 1;
        Ok(())
    }

    /// Inverts the last update: the measure before `last_visit` was added.
    /// `None` when fewer than two visits have been recorded.
    pub fn previous_masses(&self, last_visit: usize) -> Option<Vec<f64>> {
        if self.count < 2 || last_visit >= self.masses.len() {
            return None;
        }
        let k = self.count as f64;
        Some(
            self.masses
                .iter()
                .enumerate()
                .map(|(i, &m)| {
                    let hit = if i == last_visit { 1.0 } else { 0.0 };
                    ((k * m - hit) / (k - 1.0)).max(0.0)
                })
                .collect(),
        )
    }
}

/// Functional form of [`EmpiricalDistribution::update`].
pub fn dist_update(mu: &EmpiricalDistribution, visit: usize) -> Result<EmpiricalDistribution> {
    let mut next = mu.clone();
    next.update(visit)?;
    Ok(next)
}
