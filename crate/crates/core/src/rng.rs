//! Deterministic per-stream random number generators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator keyed by a base seed and any number of stream labels (frame
/// index, detector tag, ...). Identical keys give identical streams.
pub fn stream(seed: u64, labels: &[u64]) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for &l in labels {
        h = splitmix(h ^ splitmix(l));
    }
    ChaCha8Rng::seed_from_u64(h)
}

pub const TAG_RENDER: u64 = 1;
pub const TAG_CAMERA2D: u64 = 2;
pub const TAG_MONO3D: u64 = 3;
