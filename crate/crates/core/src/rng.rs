//! Seed derivation. Every random stream in the toolkit comes from a root
//! seed mixed with a stage name (and optionally an index), so stages never
//! share a stream and results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

pub fn derive_seed(seed: u64, stage: &str) -> u64 {
    splitmix64(seed ^ splitmix64(fnv1a(stage.as_bytes())))
}

pub fn derive_indexed_seed(seed: u64, stage: &str, index: u64) -> u64 {
    splitmix64(derive_seed(seed, stage) ^ splitmix64(index.wrapping_add(1)))
}

pub fn stage_rng(seed: u64, stage: &str) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, stage))
}

pub fn indexed_rng(seed: u64, stage: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive_indexed_seed(seed, stage, index))
}
