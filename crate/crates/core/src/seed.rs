//! Seed splitting.
//!
//! Every random stream is derived from one top-level seed:
//! `derive_seed(seed, label, index) = splitmix64(splitmix64(seed ^ fnv1a(label)) ^ index)`.
//! Streams for parallel work items are further separated with ChaCha's
//! stream counter, so results never depend on the number of workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ fnv1a(label)) ^ index)
}

/// Generator for work item `index` of the stream named `label`.
pub fn stream_rng(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, label, 0));
    rng.set_stream(index);
    rng
}
