//! Explicit-state, seeded random generation.
//!
//! Streams are ChaCha8 keyed by a 64-bit seed, so identical seeds give
//! bit-identical draws on every run and independent of thread count.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `len` measurement-distributed entries (`N(0,1)` real, `CN(0,1)` complex)
/// from a fresh stream keyed by `seed`.
pub fn seeded_gaussian<S: Scalar>(len: usize, seed: u64) -> Vec<S> {
    let mut rng = seeded_rng(seed);
    (0..len).map(|_| S::sample_measurement(&mut rng)).collect()
}

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent and a sequence of stream labels.
pub fn derive_seed(base: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix64(base), |acc, &l| splitmix64(acc ^ splitmix64(l)))
}
