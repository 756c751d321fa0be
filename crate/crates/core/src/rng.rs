//! Portable seeded randomness.
//!
//! Every generator in the crate draws from ChaCha8 seeded with
//! `ChaCha8Rng::seed_from_u64`, whose output stream is fixed by the
//! algorithm itself and independent of platform. Normal variates use the
//! ziggurat sampler from `rand_distr`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Seed for trial `index` of a run started from `master`.
pub fn trial_seed(master: u64, index: usize) -> u64 {
    master.wrapping_add(index as u64)
}
