//! Stable hashing for seed derivation and container checksums.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over a byte slice.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    fnv1a_extend(FNV_OFFSET, bytes)
}

fn fnv1a_extend(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a sequence of string keys.
///
/// Keys are length-prefixed so `("ab", "c")` and `("a", "bc")` differ.
pub fn derive(master: u64, keys: &[&str]) -> u64 {
    let mut h = fnv1a_extend(FNV_OFFSET, &master.to_le_bytes());
    for key in keys {
        h = fnv1a_extend(h, &(key.len() as u64).to_le_bytes());
        h = fnv1a_extend(h, key.as_bytes());
    }
    mix64(h)
}

/// Child seed for a numbered sub-stream (tree index, epoch, ...).
pub fn derive_index(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}
