//! Seeded randomness shared by every sampling routine.
//!
//! All streams come from `ChaCha8Rng::seed_from_u64`, so results are
//! reproducible by any implementation of the same generator. Derived
//! streams (evaluation, per-iteration, per-cell) are keyed by hashing the
//! parent seed together with a domain tag.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier recorded in model files and CSV provenance.
pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64";

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over a byte slice.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    fnv1a64_extend(FNV_OFFSET, bytes)
}

pub(crate) fn fnv1a64_extend(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Derives an independent stream seed from `seed` and a domain tag.
///
/// FNV-1a of the little-endian seed followed by the tag bytes, passed
/// through the SplitMix64 finalizer.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    let h = fnv1a64_extend(fnv1a64(&seed.to_le_bytes()), tag.as_bytes());
    splitmix64(h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
