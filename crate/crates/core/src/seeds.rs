//! Seed derivation. Every stochastic stage derives its own stream from a
//! base seed, a purpose tag and an index, so pipelines stay reproducible
//! when stages are added, removed or reordered.

/// splitmix64 finalizer; full avalanche on 64 bits.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for stream `tag`/`index` of `base`.
pub fn derive_seed(base: u64, tag: &str, index: u64) -> u64 {
    let mut h = base ^ 0xcbf2_9ce4_8422_2325;
    for b in tag.as_bytes() {
        h = (h ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix(h ^ mix(index))
}

#[cfg(test)]
mod tests {
    use super::derive_seed;

    #[test]
    fn distinct_tags_and_indices_decorrelate() {
        let a = derive_seed(7, "geom", 0);
        let b = derive_seed(7, "geom", 1);
        let c = derive_seed(7, "mask", 0);
        let d = derive_seed(8, "geom", 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        // And stable across calls.
        assert_eq!(a, derive_seed(7, "geom", 0));
    }
}
