use alloc::vec::Vec;

use rand::Rng;

/// One bit-swap step: `(phi(s_t), a_t, r_t, phi(s_t+1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Encoded curve before the swap.
    pub state: Vec<f64>,
    /// Output index of the swap (`position - 1`).
    pub action: usize,
    /// Normalized cost reduction.
    pub reward: f64,
    /// Encoded curve after the swap.
    pub next_state: Vec<f64>,
}

/// Ring buffer keeping the latest `capacity` transitions.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayMemory {
    /// Empty memory. `capacity` must be positive.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayMemory {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    /// Stores a transition, evicting the oldest once full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Number of stored transitions.
    pub fn len(&self) -> usize {
        self.items.len()
    }

    /// Whether nothing is stored.
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Maximum number of stored transitions.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Up to `batch` distinct transitions chosen uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<&Transition> {
        let amount = batch.min(self.items.len());
        rand::seq::index::sample(rng, self.items.len(), amount)
            .into_iter()
            .map(|i| &self.items[i])
            .collect()
    }
}
