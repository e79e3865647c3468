//! Seeded random streams.
//!
//! All randomness comes from ChaCha8 (`rand_chacha` 0.9), a counter-based
//! generator. Every stream is keyed by `(seed, domain, index)` so a pixel or
//! realization draws the same numbers no matter which worker runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Name and version of the generator, recorded in run manifests.
pub const GENERATOR: &str = "chacha8/rand_chacha-0.9";

/// Key domains keep streams used for different purposes disjoint.
pub mod domain {
    pub const SOLVER: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const PIXEL_SOLVER: u64 = 3;
    pub const GEOMETRY: u64 = 4;
    pub const BENCH: u64 = 5;
}

pub fn stream(seed: u64, domain: u64, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
