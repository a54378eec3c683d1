//! Deterministic seed derivation.
//!
//! Every stochastic draw in a run is keyed by a path of integers
//! (master seed, iteration, repeat, grid point, ...). The derived seed only
//! depends on that path, so results do not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a sequence of tags into a base seed.
pub fn derive(base: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t.wrapping_add(GOLDEN))))
}

pub fn rng(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, tags))
}

// Stream tags, kept distinct so different consumers never share a stream.
pub(crate) const TAG_TRACE: u64 = 0x7472_6163;
pub(crate) const TAG_REFERENCE: u64 = 0x7265_6672;
pub(crate) const TAG_ITERATION: u64 = 0x6974_6572;
pub(crate) const TAG_STANDARD: u64 = 0x7374_6e64;
pub(crate) const TAG_TELEGRAPH: u64 = 0x7465_6c67;
pub(crate) const TAG_PHASE: u64 = 0x7068_7365;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_depends_on_every_tag() {
        let a = derive(7, &[1, 2, 3]);
        assert_eq!(a, derive(7, &[1, 2, 3]));
        assert_ne!(a, derive(7, &[1, 2, 4]));
        assert_ne!(a, derive(7, &[2, 1, 3]));
        assert_ne!(a, derive(8, &[1, 2, 3]));
    }
}
