//! Seed derivation.
//!
//! Every random draw in the crate comes from a `ChaCha8Rng` seeded with a
//! value derived from a master seed, a stream tag and an index. ChaCha output
//! is specified independently of platform and `rand` version, which keeps
//! runs bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Distinct tags give statistically independent seed families.
pub mod stream {
    pub const ACTOR_INIT: u64 = 1;
    pub const CRITIC_INIT: u64 = 2;
    pub const EPISODE_RESET: u64 = 3;
    pub const EXPLORATION: u64 = 4;
    pub const TRAIN_STEP: u64 = 5;
    pub const WARMUP_ACTION: u64 = 6;
    pub const POPULATION: u64 = 7;
    pub const INDIVIDUAL_ENV: u64 = 8;
    pub const GENERATION: u64 = 9;
    pub const TARGET_NOISE: u64 = 10;
    pub const BATCH: u64 = 11;
    pub const TERRAIN: u64 = 12;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `(base, stream, index)` into a new 64-bit seed.
pub fn derive(base: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ stream.rotate_left(17)) ^ index.rotate_left(41))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
