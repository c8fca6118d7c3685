//! Deterministic random substreams.
//!
//! Every random decision in a run is drawn from a stream keyed by the run's
//! master seed plus a path of integers (purpose, generation, index, ...).
//! Streams never depend on scheduling, so parallel evaluation reproduces the
//! sequential result bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub(crate) const DOMAIN_INIT: u64 = 1;
pub(crate) const DOMAIN_VARIATION: u64 = 2;
pub(crate) const DOMAIN_EVALUATION: u64 = 3;
pub(crate) const DOMAIN_RANDOM_SEARCH: u64 = 4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for the stream at `path` below `seed`.
pub fn substream(seed: u64, path: &[u64]) -> StreamRng {
    let key = path.iter().fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)));
    ChaCha8Rng::seed_from_u64(key)
}

/// 64-bit FNV-1a, stable across platforms and compiler versions.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Stream used to evaluate the strategy rendered as `label` in a run seeded
/// with `seed`. Keyed by the phenotype text so any front file row can be
/// re-evaluated exactly from its `seed` and `strategy_text` columns.
pub fn evaluation_rng(seed: u64, label: &str) -> StreamRng {
    substream(seed, &[DOMAIN_EVALUATION, fnv1a(label.as_bytes())])
}
