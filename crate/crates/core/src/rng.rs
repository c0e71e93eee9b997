//! Seed splitting.
//!
//! Every replication `r` of a batch started from `base_seed` gets the run
//! seed `mix(base_seed, r)`. Within a run, chain `i` draws from the ChaCha8
//! stream `i` of that seed and population-level decisions (crossover) from
//! stream `u64::MAX`. Streams never overlap, so the output of a run is
//! independent of how runs or chains are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

const POPULATION_STREAM: u64 = u64::MAX;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `run_id` in a batch seeded with `base_seed`.
pub fn run_seed(base_seed: u64, run_id: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(run_id))
}

pub fn chain_rng(seed: u64, chain: usize) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

pub fn population_rng(seed: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(POPULATION_STREAM);
    rng
}
