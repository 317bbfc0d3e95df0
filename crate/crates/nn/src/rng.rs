use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Constructs the workspace-standard deterministic RNG from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed from a root seed, a purpose tag, and an
/// index.
///
/// Different `(tag, index)` pairs yield decorrelated streams, so subsystems
/// (weight init, shuffling, dropout, client sampling) never share or reuse a
/// stream. The derivation is pure arithmetic: stable across platforms and
/// releases.
pub fn derive_seed(root: u64, tag: &str, index: u64) -> u64 {
    let h = fnv1a(tag.as_bytes());
    let s = splitmix64(root ^ h.rotate_left(17));
    splitmix64(s ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xCBF2_9CE4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}
