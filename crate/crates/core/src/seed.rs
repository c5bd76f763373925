//! Deterministic seed derivation.
//!
//! Every random stream in the crate is addressed by a path of integers
//! (master seed, experiment index, candidate id, run index, ...). Child seeds
//! are derived by hashing the parent seed together with the child index, so a
//! stream never depends on how many siblings exist or in which order they are
//! evaluated. This is what lets batches run in parallel and still match a
//! sequential run bit for bit.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator used for all simulation work.
pub type SimRng = Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of child stream `index` under `parent`.
#[inline]
pub fn derive(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index.wrapping_mul(GOLDEN).rotate_left(17)))
}

#[inline]
pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Fixed stream labels used below an experiment seed.
pub(crate) mod stream {
    pub const SOURCE: u64 = 0x5052_4331;
    pub const GROUND_TRUTH: u64 = 0x5052_4332;
    pub const MASK: u64 = 0x5052_4333;
    pub const ESTIMATE: u64 = 0x5052_4334;
}
