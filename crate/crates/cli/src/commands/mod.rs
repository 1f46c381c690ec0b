pub mod compare;
pub mod degrade;
pub mod evaluate;
pub mod metrics;
pub mod phantom;
pub mod radiomics;
pub mod train;

use dosesim_core::rng::{fnv1a64, splitmix64};

/// Seed for a named unit of work derived from a run seed.
pub(crate) fn derived_seed(seed: u64, key: &str) -> u64 {
    splitmix64(seed ^ fnv1a64(key))
}
