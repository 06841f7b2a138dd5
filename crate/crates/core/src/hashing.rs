//! Stable string hashing for feature bucketing.
//!
//! `std::hash` makes no cross-release stability promise, but saved scorer and
//! classifier checkpoints must keep producing identical scores after a
//! toolchain upgrade. FNV-1a is tiny, fast on short tokens, and fixed forever.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a digest of `bytes`.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Bucket index for a token under a `dim`-wide feature hashing scheme.
///
/// # Panics
/// Panics if `dim` is zero.
pub fn bucket(token: &str, dim: usize) -> usize {
    assert!(dim > 0, "feature dimension must be positive");
    (fnv1a64(token.as_bytes()) % dim as u64) as usize
}

/// Derives an independent RNG seed from a base seed and a stream index
/// (epoch number, example index, …) via a splitmix64 finalizer. Decorrelates
/// streams so nearby indices don't produce nearby generator states.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_vectors() {
        // Published FNV-1a test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn buckets_are_stable_and_in_range() {
        for token in ["covid", "vaccine", "", "Ω-variant"] {
            let b = bucket(token, 256);
            assert!(b < 256);
            assert_eq!(b, bucket(token, 256), "same input must rehash identically");
        }
    }
}
