//! Seeded, splittable random streams.
//!
//! Every experiment is fully determined by `(base seed, stream index)`.
//! Streams are independent substreams of a counter-based generator, so
//! replicates can run in any order (or in parallel) and still reproduce
//! the same draws.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Number of purpose slots reserved per replicate by convention.
///
/// Drivers that need several independent streams within one replicate use
/// `stream_rng(seed, rep * STREAMS_PER_REP + purpose)`.
pub const STREAMS_PER_REP: u64 = 16;

/// Independent stream `index` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stream for replicate `rep`, purpose slot `purpose` (< [`STREAMS_PER_REP`]).
pub fn replicate_rng(seed: u64, rep: u64, purpose: u64) -> ChaCha12Rng {
    debug_assert!(purpose < STREAMS_PER_REP);
    stream_rng(seed, rep * STREAMS_PER_REP + purpose)
}
