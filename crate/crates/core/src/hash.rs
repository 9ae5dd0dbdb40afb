//! Deterministic hashing and seed derivation.
//!
//! Everything seeded in this crate bottoms out here: sub-seeds for trees,
//! shard/slice assignment, token bucketing, and content fingerprints are
//! all pure functions of their inputs, so identical inputs reproduce
//! identical models and files on any platform.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer; a cheap, well-mixed 64-bit permutation.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive an independent sub-seed from a master seed and a stream index.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

/// Seeded stable hash of a row id, used for shard and slice assignment.
/// Stable under deletion of other rows by construction.
pub fn assign_hash(seed: u64, salt: u64, row_id: u64) -> u64 {
    splitmix64(mix_seed(seed, salt) ^ splitmix64(row_id))
}

/// Streaming FNV-1a, used for token bucketing and content fingerprints.
#[derive(Debug, Clone)]
pub struct Fnv1a(u64);

impl Fnv1a {
    pub fn new() -> Self {
        Fnv1a(FNV_OFFSET)
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    pub fn write_f64(&mut self, v: f64) {
        self.write_u64(v.to_bits());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

/// Seeded hash of a text token into `0..u64::MAX`; callers reduce modulo
/// their bucket count.
pub fn token_hash(seed: u64, token: &str) -> u64 {
    let mut h = Fnv1a::new();
    h.write_u64(seed);
    h.write(token.as_bytes());
    h.finish()
}
