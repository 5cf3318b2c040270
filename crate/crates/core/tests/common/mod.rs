#![allow(dead_code)]

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Deterministic uniform samples for tests.
pub struct Uniform(ChaCha8Rng);

impl Uniform {
    pub fn new(seed: u64) -> Self {
        Uniform(ChaCha8Rng::seed_from_u64(seed))
    }

    /// A sample from `[lo, hi)`.
    pub fn next(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }
}

/// Largest relative deviation over entries where the reference exceeds `floor`.
pub fn max_rel(approx: &[f64], reference: &[f64], floor: f64) -> f64 {
    approx
        .iter()
        .zip(reference)
        .filter(|(_, r)| r.abs() > floor)
        .map(|(a, r)| (a - r).abs() / r.abs())
        .fold(0.0, f64::max)
}
