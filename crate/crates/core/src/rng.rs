//! Portable random pipeline used for instance generation.
//!
//! The generator is SplitMix64 with the state initialised to the raw seed.
//! Each output word `w` is mapped to a uniform double in `[0, 1)` as
//! `(w >> 11) * 2^-53`. Any language with 64-bit wrapping arithmetic can
//! reproduce the exact coordinate stream from these two rules.

use rand::RngCore;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

pub struct UnitStream {
    inner: SplitMix64,
}

impl UnitStream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::from_seed(seed.to_le_bytes()),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Seed of the `index`-th instance of a given size in a benchmark suite.
pub fn suite_seed(base_seed: u64, size: usize, index: usize) -> u64 {
    base_seed
        .wrapping_mul(1_000_000)
        .wrapping_add(size as u64 * 1000)
        .wrapping_add(index as u64)
}
