//! Counter-based seed derivation. A child seed depends only on the parent
//! seed and its own labels, so adding a new stream never shifts another.

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed for the stream named by `labels` under `parent`.
pub fn derive(parent: u64, labels: &[&str]) -> u64 {
    labels
        .iter()
        .fold(splitmix64(parent), |acc, l| splitmix64(acc ^ fnv1a(l.as_bytes())))
}

/// Seed for the `index`-th member of a family (trees, repeats).
pub fn derive_index(parent: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}
