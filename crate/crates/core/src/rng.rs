//! Seed derivation. Every random decision in the crate draws from a
//! `ChaCha8Rng` whose seed is derived from the user seed plus a purpose tag,
//! so independent consumers never share (or perturb) a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Purpose tags for derived streams.
pub mod stream {
    pub const INIT: u64 = 1;
    pub const VAL_SPLIT: u64 = 2;
    pub const SHUFFLE: u64 = 3;
    pub const DROPOUT: u64 = 4;
    pub const FOLDS: u64 = 5;
    pub const FOLD_SEED: u64 = 6;
    pub const HOLDOUT: u64 = 7;
    pub const RESAMPLE: u64 = 8;
    pub const EMBEDDING: u64 = 9;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index)
}

pub fn seeded(seed: u64, stream: u64, index: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}

/// Order-sensitive 64-bit FNV-1a over a sequence of strings. Each item is
/// terminated by a 0xff byte, which cannot occur in UTF-8.
pub fn fingerprint<'a>(items: impl IntoIterator<Item = &'a str>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |b: u8| {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    for item in items {
        for &b in item.as_bytes() {
            eat(b);
        }
        eat(0xff);
    }
    h
}
