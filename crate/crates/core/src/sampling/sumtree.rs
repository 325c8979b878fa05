use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Complete binary tree of prefix sums over non-negative leaf values.
///
/// Stored as an implicit heap: node 1 is the root, node `i` has children `2i`
/// and `2i + 1`, and leaf `j` lives at `leaf_count + j`. Parents are always
/// recomputed as the sum of their children, never adjusted by deltas, so no
/// drift accumulates across updates.
#[derive(Debug, Clone, PartialEq)]
pub struct SumTree {
    leaf_count: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    /// Tree with at least `capacity` leaves, all zero.
    pub fn new(capacity: usize) -> Self {
        let leaf_count = capacity.max(1).next_power_of_two();
        Self {
            leaf_count,
            nodes: vec![0.0; 2 * leaf_count],
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, leaf: usize) -> f64 {
        self.nodes[self.leaf_count + leaf]
    }

    pub fn update(&mut self, leaf: usize, value: f64) -> Result<()> {
        if leaf >= self.leaf_count {
            return Err(Error::OutOfBounds {
                index: leaf,
                len: self.leaf_count,
            });
        }
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::Domain(format!(
                "leaf values must be finite and non-negative, got {value}"
            )));
        }
        let mut node = self.leaf_count + leaf;
        self.nodes[node] = value;
        while node > 1 {
            node /= 2;
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
        }
        Ok(())
    }

    /// Recomputes every internal node from the leaves.
    pub fn rebuild(&mut self) {
        for node in (1..self.leaf_count).rev() {
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
        }
    }

    /// Leaf `i` with `cumsum(..i) <= u < cumsum(..=i)`.
    pub fn find_prefix(&self, u: f64) -> Result<usize> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::Domain("sum tree is empty".into()));
        }
        if !(u >= 0.0 && u < total) {
            return Err(Error::Domain(format!("{u} outside [0, {total})")));
        }
        let mut node = 1;
        let mut u = u;
        while node < self.leaf_count {
            let left = self.nodes[2 * node];
            // the right-child check only matters when rounding pushes u past a
            // subtree whose remaining mass is zero
            if u >= left && self.nodes[2 * node + 1] > 0.0 {
                u -= left;
                node = 2 * node + 1;
            } else {
                node *= 2;
            }
        }
        Ok(node - self.leaf_count)
    }
}
