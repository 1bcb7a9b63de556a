//! Deterministic random streams derived from one user seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Sample = 1,
    Bucket = 2,
    Palette = 3,
    Oracle = 4,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent stream for `(seed, index, purpose)`.
pub fn stream(seed: u64, index: u64, purpose: Purpose) -> ChaCha8Rng {
    let s = splitmix64(splitmix64(splitmix64(seed) ^ index) ^ purpose as u64);
    ChaCha8Rng::seed_from_u64(s)
}
