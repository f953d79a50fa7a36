//! Seed derivation.
//!
//! Every random stage draws from its own ChaCha8 stream whose seed is derived
//! from a parent seed and a list of integer labels. The mixing function is
//! SplitMix64's finalizer applied after each label, so derived seeds are stable
//! across platforms and releases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Labels for the independent streams of one simulated trial.
pub mod stream {
    pub const WAVEFORM: u64 = 1;
    pub const MULTIPATH: u64 = 2;
    pub const PHASE: u64 = 3;
    pub const NOISE: u64 = 4;
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and a path of labels.
pub fn derive_seed(parent: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(mix(parent), |acc, &label| mix(acc ^ mix(label)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
