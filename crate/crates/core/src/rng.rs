//! Keyed random streams.
//!
//! Every draw is addressed by a tuple of integers rather than by its position
//! in a sequential stream: the tuple becomes the 256-bit ChaCha8 key, so the
//! same `(seed, domain, node, round)` always yields the same numbers no
//! matter which algorithm asks, in which order, or on which platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifies the generator in run metadata.
pub const GENERATOR: &str = "chacha8-keyed(seed,domain,node,round)+ziggurat-normal";

/// Domain tags keep independent uses of the same master seed apart.
pub(crate) mod domain {
    pub const CENTERS: u64 = 0x6365_6e74_6572_7300;
    pub const GRAD_NOISE: u64 = 0x6e6f_6973_6500_0000;
}

pub(crate) fn keyed_rng(seed: u64, domain: u64, node: u64, round: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key[16..24].copy_from_slice(&node.to_le_bytes());
    key[24..32].copy_from_slice(&round.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a list of words into a child seed of `master`.
pub fn derive_seed(master: u64, words: &[u64]) -> u64 {
    words.iter().fold(splitmix64(master), |acc, &w| {
        splitmix64(acc ^ splitmix64(w))
    })
}
