//! Deterministic hashing and stream-derived RNGs.
//!
//! Every source of randomness in the crate is a `ChaCha8Rng` derived from a
//! user seed plus a purpose tag, so that runs are reproducible and
//! independent random streams never alias.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    fnv1a64_extend(FNV_OFFSET, bytes)
}

/// Continues an FNV-1a hash with more bytes.
pub fn fnv1a64_extend(hash: u64, bytes: &[u8]) -> u64 {
    let mut h = hash;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// An RNG for the stream identified by `(seed, tag, index)`.
pub fn rng_for(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    let mut h = fnv1a64(&seed.to_le_bytes());
    h = fnv1a64_extend(h, tag.as_bytes());
    h = fnv1a64_extend(h, &index.to_le_bytes());
    ChaCha8Rng::seed_from_u64(h)
}
