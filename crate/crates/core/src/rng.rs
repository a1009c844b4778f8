//! Reproducible random streams keyed by `(seed, stream)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for sample `stream` of a run seeded with `seed`.
/// Results do not depend on the order in which streams are consumed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a tag into a seed so distinct consumers of one run seed do not
/// share streams.
pub fn subseed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
