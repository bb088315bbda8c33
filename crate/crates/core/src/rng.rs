//! Seed handling. All randomness comes from `ChaCha8Rng` (rand_chacha 0.9)
//! seeded through `seed_from_u64`; independent streams are derived with the
//! SplitMix64 finalizer so that a master seed fans out into reproducible,
//! platform-independent child seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Child seed number `stream` of `seed`.
pub fn split(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
