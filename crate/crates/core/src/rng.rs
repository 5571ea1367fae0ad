//! Seeded, portable shuffling.
//!
//! All randomized corpus operations draw from ChaCha8 seeded through
//! `SeedableRng::seed_from_u64(seed)` and shuffle with a Fisher-Yates pass
//! that runs from the last index down. The swap partner for index `i` is
//! `(next_u64() * (i + 1)) >> 64` computed in 128-bit arithmetic. Both the
//! generator and the reduction are fully specified, so another
//! implementation can reproduce every split and sample bit for bit.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Default seed used by sampling and splitting commands.
pub const DEFAULT_SEED: u64 = 42;

pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform index in `0..bound`. `bound` must be non-zero.
    pub fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        ((self.inner.next_u64() as u128 * bound as u128) >> 64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
