use std::collections::VecDeque;

use rand::Rng;

use crate::error::{NavError, Result};

/// One complete episode as seen by the learner.
///
/// `obs` holds one more entry than `actions`: the observation after the last
/// action. `terminal` marks an episode that ended in success, so its final
/// transition is not bootstrapped.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<[f64; 4]>,
    pub rewards: Vec<f64>,
    pub terminal: bool,
}

impl EpisodeRecord {
    pub fn new(first_obs: Vec<f64>) -> Self {
        Self { obs: vec![first_obs], actions: Vec::new(), rewards: Vec::new(), terminal: false }
    }

    pub fn push(&mut self, action: [f64; 4], reward: f64, next_obs: Vec<f64>) {
        self.actions.push(action);
        self.rewards.push(reward);
        self.obs.push(next_obs);
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Whether transition `t` ends the episode without bootstrapping.
    pub fn done_at(&self, t: usize) -> bool {
        self.terminal && t + 1 == self.len()
    }
}

/// A contiguous window `[start, start + len)` of one stored episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subsequence {
    pub episode: usize,
    pub start: usize,
    pub len: usize,
}

/// FIFO store of whole episodes.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    episodes: VecDeque<EpisodeRecord>,
    transitions: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), episodes: VecDeque::new(), transitions: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn transitions(&self) -> usize {
        self.transitions
    }

    pub fn episode(&self, i: usize) -> &EpisodeRecord {
        &self.episodes[i]
    }

    /// Stores an episode, evicting the oldest when full. Empty episodes are ignored.
    pub fn push(&mut self, ep: EpisodeRecord) {
        if ep.is_empty() {
            return;
        }
        if self.episodes.len() == self.capacity {
            if let Some(old) = self.episodes.pop_front() {
                self.transitions -= old.len();
            }
        }
        self.transitions += ep.len();
        self.episodes.push_back(ep);
    }

    /// Draws `count` windows of at most `len` steps. Episodes are chosen with
    /// probability proportional to their length; windows never cross an
    /// episode boundary.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize, len: usize) -> Result<Vec<Subsequence>> {
        if self.transitions == 0 {
            return Err(NavError::Usage("replay buffer is empty".into()));
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut k = rng.random_range(0..self.transitions);
            let mut episode = 0;
            while k >= self.episodes[episode].len() {
                k -= self.episodes[episode].len();
                episode += 1;
            }
            let n = self.episodes[episode].len();
            let w = len.min(n);
            let start = rng.random_range(0..=n - w);
            out.push(Subsequence { episode, start, len: w });
        }
        Ok(out)
    }
}
