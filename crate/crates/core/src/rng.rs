//! Stateless keyed randomness for coefficient sources that are looked up by cube.

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn keyed_u64(seed: u64, key: &[u64]) -> u64 {
    key.iter().fold(mix(seed), |h, &k| mix(h ^ k))
}

/// +1 or -1, determined by the seed and key.
pub(crate) fn keyed_sign(seed: u64, key: &[u64]) -> f64 {
    if keyed_u64(seed, key) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}
