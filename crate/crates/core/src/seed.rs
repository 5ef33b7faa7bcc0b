//! Seed derivation.
//!
//! Every random decision in the pipeline draws from its own stream, derived
//! from the per-sample seed and a fixed purpose tag. Streams never share
//! state, so adding a draw in one stage cannot shift another stage.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const TAG_OBJECT: u64 = 1;
pub const TAG_POSE: u64 = 2;
pub const TAG_BACKGROUND: u64 = 3;
pub const TAG_TEXTURE: u64 = 4;
pub const TAG_LIGHTS: u64 = 5;
pub const TAG_AUGMENT: u64 = 6;
pub const TAG_DOMAIN_B: u64 = 7;
pub const TAG_CROP: u64 = 8;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample seed of the sample at `index`.
pub fn sample_seed(root: u64, index: u64) -> u64 {
    root.wrapping_add(index)
}

/// Independent sub-seed for one purpose.
pub fn derive(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
