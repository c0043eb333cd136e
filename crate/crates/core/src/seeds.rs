//! Splittable seed derivation.
//!
//! Every random object in the crate is generated from a `u64` seed. Seeds for
//! the members of an ensemble are derived from a base seed and the sample
//! index with a SplitMix64-style finalizer, so sample `k` can be regenerated
//! without touching samples `0..k` and ensembles can be extended in place.
//!
//! Derivation is `mix(mix(base ^ stream_tag) + GOLDEN * (index + 1))`. The
//! stream tag separates independent uses of the same base seed (frequency
//! shuffles vs. initial-condition shuffles, say) so they never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere. ChaCha is portable and reproducible
/// across platforms, which matters more here than raw speed.
pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Independent derivation streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Frequencies = 0x6672_6571,
    InitialConditions = 0x696e_6974,
    Topology = 0x746f_706f,
    Shuffle = 0x7368_7566,
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for sample `index` of stream `stream` under `base`.
pub fn derive(base: u64, stream: Stream, index: u64) -> u64 {
    let keyed = splitmix64(base ^ stream as u64);
    splitmix64(keyed.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn derived_seeds_are_distinct_across_indices_and_streams() {
        let mut seen = HashSet::new();
        for stream in [
            Stream::Frequencies,
            Stream::InitialConditions,
            Stream::Topology,
            Stream::Shuffle,
        ] {
            for i in 0..2000 {
                assert!(seen.insert(derive(7, stream, i)));
            }
        }
    }

    #[test]
    fn derivation_is_pure() {
        assert_eq!(derive(42, Stream::Shuffle, 17), derive(42, Stream::Shuffle, 17));
        assert_ne!(derive(42, Stream::Shuffle, 17), derive(43, Stream::Shuffle, 17));
    }
}
