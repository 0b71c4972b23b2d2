//! Fixed-capacity experience replay.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_observation: Vec<f64>,
    /// True terminal state: no bootstrapping from `next_observation`.
    pub done: bool,
}

impl Transition {
    fn is_finite(&self) -> bool {
        self.reward.is_finite()
            && self.observation.iter().all(|v| v.is_finite())
            && self.action.iter().all(|v| v.is_finite())
            && self.next_observation.iter().all(|v| v.is_finite())
    }
}

/// Ring buffer that overwrites its oldest entry once full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    action_dim: usize,
    entries: Vec<Transition>,
    write_index: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, action_dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be at least 1".into()));
        }
        Ok(Self {
            capacity,
            obs_dim,
            action_dim,
            entries: Vec::new(),
            write_index: 0,
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

    pub fn write_index(&self) -> usize {
        self.write_index
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        if t.observation.len() != self.obs_dim
            || t.next_observation.len() != self.obs_dim
            || t.action.len() != self.action_dim
        {
            return Err(Error::Input(format!(
                "transition shape ({}, {}, {}) does not match buffer ({}, {})",
                t.observation.len(),
                t.action.len(),
                t.next_observation.len(),
                self.obs_dim,
                self.action_dim
            )));
        }
        if !t.is_finite() {
            return Err(Error::Input("transition contains non-finite values".into()));
        }
        if self.entries.len() < self.capacity {
            self.entries.push(t);
        } else {
            self.entries[self.write_index] = t;
        }
        self.write_index = (self.write_index + 1) % self.capacity;
        Ok(())
    }

    /// Entries from oldest to newest.
    pub fn iter_chronological(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.entries.len() < self.capacity {
            0
        } else {
            self.write_index
        };
        self.entries[split..]
            .iter()
            .chain(self.entries[..split].iter())
    }

    /// `batch_size` uniform draws with replacement.
    pub fn sample_batch(&self, batch_size: usize, seed: u64) -> Result<Vec<&Transition>> {
        let idx = self.sample_indices(batch_size, seed)?;
        Ok(idx.into_iter().map(|i| &self.entries[i]).collect())
    }

    pub fn sample_indices(&self, batch_size: usize, seed: u64) -> Result<Vec<usize>> {
        if self.entries.is_empty() {
            return Err(Error::State(
                "cannot sample from an empty replay buffer".into(),
            ));
        }
        let mut rng = crate::seed::rng(seed);
        let n = self.entries.len();
        Ok((0..batch_size).map(|_| rng.random_range(0..n)).collect())
    }
}
