//! Seed derivation.

/// FNV-1a hash of a purpose tag.
pub fn tag_hash(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Sub-seed for one purpose: `seed + hash(tag)`, so that each component can be
/// re-run in isolation from the global seed.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    seed.wrapping_add(tag_hash(tag))
}
