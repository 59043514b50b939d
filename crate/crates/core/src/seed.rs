//! Seed derivation for independent random streams.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of indices into a new seed.
///
/// Each component is folded in with a SplitMix64 round, so `derive_seed(s, &[a, b])`
/// depends only on `(s, a, b)` and not on any other cell of a sweep.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(base), |acc, &p| splitmix(acc ^ splitmix(p.wrapping_add(GOLDEN))))
}
