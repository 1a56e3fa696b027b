//! Seed derivation and counter-based randomness.
//!
//! Every stochastic routine takes an explicit seed. Independent streams are
//! obtained by hashing `(seed, stream)` so that replicas can be run in any
//! order (or in parallel) and still produce identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a stream index into a new seed.
#[inline]
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(stream.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Counter-based hash of three words; used for replayable arrow stacks.
#[inline]
pub fn hash3(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(derive_seed(seed, a) ^ splitmix64(b.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
}

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream))
}

/// Maps a 64-bit hash to `0..n` by multiply-shift.
#[inline]
pub fn bounded(hash: u64, n: usize) -> usize {
    ((hash as u128 * n as u128) >> 64) as usize
}
