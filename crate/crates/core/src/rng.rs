//! Counter-based derivation of independent RNG streams.
//!
//! Every worker-visible stream is seeded from `(master_seed, domain, index)`
//! through a SplitMix64 mixing chain, so results do not depend on scheduling
//! or worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream domains. Keeping field synthesis and path noise in separate
/// domains lets the zero-drift shortcut skip synthesis without disturbing
/// the noise stream.
#[derive(Debug, Clone, Copy)]
pub enum Domain {
    FieldSynthesis = 1,
    PathNoise = 2,
    Pilot = 3,
}

#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `(master, domain, index)`.
pub fn derive_seed(master: u64, domain: Domain, index: u64) -> u64 {
    let a = splitmix64(master ^ splitmix64(domain as u64));
    splitmix64(a ^ splitmix64(index))
}

/// Deterministic stream for the given coordinates.
pub fn stream(master: u64, domain: Domain, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, domain, index))
}
