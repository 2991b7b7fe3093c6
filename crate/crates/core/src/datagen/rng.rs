//! Integer-only sampling on top of xoshiro256**.
//!
//! The generator state is seeded from a `u64` with SplitMix64
//! (`z = (s += 0x9e3779b97f4a7c15); z = (z ^ z>>30)·0xbf58476d1ce4e5b9;
//! z = (z ^ z>>27)·0x94d049bb133111eb; z ^ z>>31`, four outputs), and each draw
//! is the standard xoshiro256** step `rotl(s1·5, 7)·9`. Every sampling
//! decision below uses only integer arithmetic on those 64-bit outputs, so the
//! stream can be reproduced exactly from another language.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

pub struct SeededRng(Xoshiro256StarStar);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256StarStar::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform integer in `0..n` by rejection sampling.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let limit = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < limit {
                return x % n;
            }
        }
    }

    /// `true` with probability `p`: compares the top 53 bits of a draw with
    /// `floor(p · 2^53)`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        let threshold = (p * (1u64 << 53) as f64) as u64;
        (self.next_u64() >> 11) < threshold
    }
}
