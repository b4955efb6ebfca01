//! Seeded random streams.
//!
//! Every realization draws from its own ChaCha8 stream: the key comes from the
//! master seed and the stream id is the realization index. Results therefore do
//! not depend on which worker ran which realization.
//!
//! Gaussian variates use the ziggurat sampler of `rand_distr::StandardNormal`,
//! scaled by the standard deviation. Changing either the generator or the
//! sampler changes every golden value, so both are fixed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream for one realization of an experiment seeded with `master`.
pub fn substream(master: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Seed derived from `master` for a named auxiliary purpose (e.g. volatility draws),
/// kept disjoint from the realization streams.
pub fn derived_seed(master: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
