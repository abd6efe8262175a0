//! Counter-derived seeds.
//!
//! A child seed is obtained by folding each tag word into the state with the
//! SplitMix64 finalizer: `s ← mix(s ⊕ mix(tag + GOLDEN))`. Streams are
//! addressed by tags (target id, member index, ...), so adding a stream never
//! shifts the seeds of the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(root: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix(root.wrapping_add(GOLDEN)), |s, &t| mix(s ^ mix(t.wrapping_add(GOLDEN))))
}

/// Stable 64-bit tag for a stream name (FNV-1a).
pub fn tag(name: &str) -> u64 {
    name.bytes()
        .fold(0xCBF2_9CE4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

pub fn rng_for(root: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, tags))
}
