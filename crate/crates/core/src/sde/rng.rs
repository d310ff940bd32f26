//! Counter-addressed noise: draw `k` of path `j` under seed `s` is a pure function
//! of `(s, j, k)`, so scheduling never changes results.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc_inv;

/// ChaCha8 keyed by `seed`, positioned at the start of `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(0);
    rng
}

/// Maps 64 random bits to the open interval `(0, 1)`.
#[inline]
pub fn unit_open(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Standard normal by inverse CDF.
#[inline]
pub fn std_normal(bits: u64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * unit_open(bits))
}

/// Two normals per step; step `k` occupies words `4k .. 4k+4` of the path's stream.
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, path: u64) -> Self {
        Self { rng: stream_rng(seed, path) }
    }

    /// Jumps to step `step`.
    pub fn seek(&mut self, step: u64) {
        self.rng.set_word_pos(step as u128 * 4);
    }

    pub fn next_pair(&mut self) -> (f64, f64) {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        (std_normal(a), std_normal(b))
    }

    /// Draws of step `step` without disturbing sequential order semantics.
    pub fn at(seed: u64, path: u64, step: u64) -> (f64, f64) {
        let mut s = Self::new(seed, path);
        s.seek(step);
        s.next_pair()
    }
}

/// Derives a child seed; used for auxiliary ensembles that must be independent.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut rng = stream_rng(seed, u64::MAX - tag);
    rng.next_u64()
}
