//! Fixed-capacity FIFO replay storage with insertion timestamps.
//!
//! Indices handed out by [`ReplayBuffer::push`] and accepted by
//! [`ReplayBuffer::get`] are physical slot indices. Age-ordered access goes
//! through *logical* positions, where logical position 0 is the oldest live
//! entry.

use alloc::vec::Vec;

use crate::{Error, Result};

/// One stored step of experience.
#[derive(Debug, Clone, PartialEq)]
pub struct TimestampedTransition<O = Vec<f64>, A = usize> {
    pub state: O,
    pub action: A,
    pub reward: f64,
    pub next_state: O,
    pub done: bool,
    /// Global environment step at which the transition was collected.
    pub timestamp: u64,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer<O = Vec<f64>, A = usize> {
    entries: Vec<TimestampedTransition<O, A>>,
    /// Copy of each slot's timestamp, kept contiguous for weight passes.
    timestamps: Vec<u64>,
    capacity: usize,
    write_cursor: usize,
    total_pushes: u64,
}

impl<O, A> ReplayBuffer<O, A> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(Self {
            entries: Vec::with_capacity(capacity.min(1 << 20)),
            timestamps: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            write_cursor: 0,
            total_pushes: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    /// Number of pushes since construction, evicted entries included.
    pub fn total_pushes(&self) -> u64 {
        self.total_pushes
    }

    /// Timestamp of the most recent push, if any.
    pub fn newest_timestamp(&self) -> Option<u64> {
        if self.entries.is_empty() {
            None
        } else {
            Some(self.timestamp_at_logical(self.entries.len() - 1))
        }
    }

    /// Stores `tr`, evicting the oldest entry when full. Returns the slot index.
    pub fn push(&mut self, tr: TimestampedTransition<O, A>) -> Result<usize> {
        if let Some(newest) = self.newest_timestamp() {
            if tr.timestamp < newest {
                return Err(Error::Ordering {
                    got: tr.timestamp,
                    newest,
                });
            }
        }
        let slot = self.write_cursor;
        if self.entries.len() < self.capacity {
            self.timestamps.push(tr.timestamp);
            self.entries.push(tr);
        } else {
            self.timestamps[slot] = tr.timestamp;
            self.entries[slot] = tr;
        }
        self.write_cursor = (slot + 1) % self.capacity;
        self.total_pushes += 1;
        Ok(slot)
    }

    pub fn get(&self, index: usize) -> Result<&TimestampedTransition<O, A>> {
        self.entries.get(index).ok_or(Error::OutOfBounds {
            index,
            len: self.entries.len(),
        })
    }

    /// Physical slot of the entry at logical (age-ordered) position `pos`.
    #[inline]
    pub fn physical_index(&self, pos: usize) -> usize {
        if self.is_full() {
            let p = self.write_cursor + pos;
            if p >= self.capacity {
                p - self.capacity
            } else {
                p
            }
        } else {
            pos
        }
    }

    #[inline]
    pub fn timestamp_at_logical(&self, pos: usize) -> u64 {
        self.timestamps[self.physical_index(pos)]
    }

    #[inline]
    pub fn timestamp_at_slot(&self, slot: usize) -> u64 {
        self.timestamps[slot]
    }

    /// Timestamps by physical slot.
    pub fn timestamps(&self) -> &[u64] {
        &self.timestamps
    }

    /// Live timestamps as two contiguous runs, oldest first; the second run
    /// is empty until the ring wraps.
    pub fn timestamp_segments(&self) -> (&[u64], &[u64]) {
        if self.is_full() {
            let (head, tail) = self.timestamps.split_at(self.write_cursor);
            (tail, head)
        } else {
            (&self.timestamps, &[])
        }
    }

    /// Live entries oldest first.
    pub fn iter_logical(&self) -> impl Iterator<Item = &TimestampedTransition<O, A>> + '_ {
        (0..self.entries.len()).map(move |p| &self.entries[self.physical_index(p)])
    }

    /// `now - t_i` for each live entry, oldest first.
    pub fn ages(&self, now: u64) -> Result<Vec<u64>> {
        if let Some(newest) = self.newest_timestamp() {
            if now < newest {
                return Err(Error::Precondition {
                    now,
                    timestamp: newest,
                });
            }
        }
        Ok(self.iter_logical().map(|e| now - e.timestamp).collect())
    }
}
