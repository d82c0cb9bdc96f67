//! Seed derivation and stream-split generators.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 generator keyed by a
//! 64-bit seed and a stream id. Replica and walker seeds are derived from a master
//! seed by a SplitMix64 mix of the counter, so a replica's draws never depend on
//! which worker ran it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier of the generator family, recorded in run manifests.
pub const RNG_NAME: &str = "chacha8 (rand_chacha 0.9) + splitmix64 counter derivation, v1";

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed number `index` of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

/// Generator for `(seed, stream)`; distinct streams are independent sequences.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
