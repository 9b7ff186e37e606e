//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from one
//! master seed. Sub-seeds are derived as
//! `splitmix64(master ^ splitmix64(stream_tag) + index)`, where `stream_tag`
//! is a fixed constant per purpose, so a single `--seed` reproduces a whole
//! run (splits, shuffles, dropout masks, ensemble members, folds).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub mod stream {
    pub const SPLIT: u64 = 1;
    pub const INIT: u64 = 2;
    pub const SHUFFLE: u64 = 3;
    pub const DROPOUT: u64 = 4;
    pub const MEMBER: u64 = 5;
    pub const BOOTSTRAP: u64 = 6;
    pub const FOLDS: u64 = 7;
    pub const VALIDATION: u64 = 8;
    pub const SYNTH: u64 = 9;
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(master: u64, stream_tag: u64, index: u64) -> u64 {
    splitmix64((master ^ splitmix64(stream_tag)).wrapping_add(index))
}

pub fn rng(master: u64, stream_tag: u64, index: u64) -> Rng {
    Rng::seed_from_u64(derive(master, stream_tag, index))
}
