//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a `u64`
//! that is derived from the caller's seed and a fixed stream label, so the
//! same inputs always produce bit-identical outputs on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels used when splitting a single seed into independent streams.
pub mod stream {
    pub const SIZE_PMF: u64 = 1;
    pub const TIME_PMF: u64 = 2;
    pub const SIZE_SAMPLES: u64 = 3;
    pub const TIME_SAMPLES: u64 = 4;
    pub const NODE_DIST: u64 = 5;
    pub const PACKER: u64 = 6;
    pub const SLOT: u64 = 7;
    pub const SIM: u64 = 8;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `parts` into `base`, yielding a well-distributed child seed.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// 64-bit FNV-1a, used to fold names into seeds.
pub fn hash_str(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
