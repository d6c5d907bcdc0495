//! Counter-based pseudo-random numbers.
//!
//! The value for `(seed, counter)` is `splitmix64(splitmix64(seed) ^ counter)`,
//! where `splitmix64` is the standard finalizer with constants
//! `0x9E3779B97F4A7C15`, `0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`.
//! Uniform doubles take the top 53 bits. Draws never depend on call order,
//! so any implementation reproduces the same fields from the same seed.

pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn hash(seed: u64, counter: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ counter)
}

/// Uniform in `[0, 1)`.
pub fn uniform(seed: u64, counter: u64) -> f64 {
    (hash(seed, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in `[-1, 1)`.
pub fn symmetric(seed: u64, counter: u64) -> f64 {
    2.0 * uniform(seed, counter) - 1.0
}

/// Sequential stream over the counter space, for tests and sampling.
#[derive(Clone, Debug)]
pub struct Stream {
    seed: u64,
    counter: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream { seed, counter: 0 }
    }

    pub fn uniform(&mut self) -> f64 {
        let v = uniform(self.seed, self.counter);
        self.counter += 1;
        v
    }

    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}
