//! Seeding policy.
//!
//! Every random quantity in the crate flows from a single base seed through
//! [`derive_seed`], so runs are reproducible and sub-streams (graph
//! generation, data generation, per-iteration sampling) are independent.
//!
//! The generator is ChaCha8 seeded through `SeedableRng::seed_from_u64`;
//! stream seeds are derived with the SplitMix64 finalizer.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name recorded in run summaries so traces can be reproduced elsewhere.
pub const RNG_ALGORITHM: &str = "ChaCha8(seed_from_u64); streams = SplitMix64(seed ^ domain ^ index)";

/// Named sub-streams of a run seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedDomain {
    GraphGen = 1,
    DataGen = 2,
    Sampler = 3,
    HiddenWeights = 4,
}

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream (`domain`, `index`) from a base seed.
pub fn derive_seed(base: u64, domain: SeedDomain, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(domain as u64) ^ splitmix64(index.wrapping_mul(0x9e37_79b9)))
}

/// Deterministic generator for a (derived) seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_seeds_are_deterministic_and_distinct() {
        let a = derive_seed(7, SeedDomain::Sampler, 0);
        let b = derive_seed(7, SeedDomain::Sampler, 0);
        assert_eq!(a, b);
        assert_ne!(a, derive_seed(7, SeedDomain::Sampler, 1));
        assert_ne!(a, derive_seed(7, SeedDomain::DataGen, 0));
        assert_ne!(a, derive_seed(8, SeedDomain::Sampler, 0));
    }

    #[test]
    fn rng_streams_reproduce() {
        let mut r1 = rng_from(derive_seed(42, SeedDomain::GraphGen, 0));
        let mut r2 = rng_from(derive_seed(42, SeedDomain::GraphGen, 0));
        for _ in 0..16 {
            assert_eq!(r1.random::<u64>(), r2.random::<u64>());
        }
    }
}
