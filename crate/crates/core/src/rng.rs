//! Seeded random streams.
//!
//! Every stochastic routine in the crate draws from [`SimRng`] (ChaCha with 8 rounds, a 64-bit
//! seeded generator whose output is stable across platforms and crate releases). Independent
//! streams are derived from a base seed plus a tuple of integers so that parallel work items are
//! reproducible regardless of scheduling.

use rand::SeedableRng;

pub type SimRng = rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(base: u64, parts: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(base, parts))
}
