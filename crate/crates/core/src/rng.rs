//! Counter-based random substreams.
//!
//! Every random draw in the library comes from a generator addressed by
//! `(seed, domain, index)`. Trial `i` therefore sees the same numbers no
//! matter which worker thread runs it or how many trials surround it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent purposes that may draw from the same master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Channel = 1,
    LargeScale = 2,
    Symbols = 3,
    Noise = 4,
    Profile = 5,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for substream `index` of `domain` under `seed`.
pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ mix(domain as u64)));
    rng.set_stream(index);
    rng
}

/// Derive a child seed, e.g. the trial seed used inside one large-scale profile.
pub fn child_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    mix(mix(seed ^ mix(domain as u64)) ^ mix(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}
