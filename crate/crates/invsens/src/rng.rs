//! Deterministic random-number plumbing.
//!
//! Every randomized routine in this crate takes `&mut impl Rng` so callers
//! control seeding. [`SeededRng`] is the concrete generator used by the
//! binaries: a ChaCha8 stream cipher seeded from a `u64`, which is fast,
//! portable, and reproducible across platforms.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Reproducible generator for experiment harnesses.
#[derive(Debug, Clone)]
pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
}

/// Derive an independent stream seed from a base seed and lane indices.
///
/// Trials and sweep points must not share streams; hashing `(seed, lane, idx)`
/// through splitmix64 gives well-separated seeds without coordination.
pub fn mix_seed(seed: u64, lane: u64, idx: u64) -> u64 {
    let mut z = seed
        .wrapping_add(lane.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(idx.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
