//! Deterministic random streams.
//!
//! Every consumer of randomness draws from a ChaCha8 stream derived from the
//! global seed and a stable label (a vertex id, an incident index). Streams
//! never depend on execution order, so a run is reproducible no matter how
//! vertices or incidents are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Domain tags keep streams for different purposes apart.
pub(crate) const DOMAIN_VERTEX: u64 = 0x7665_7274; // "vert"
pub(crate) const DOMAIN_INCIDENT: u64 = 0x696e_6364; // "incd"
pub(crate) const DOMAIN_CLUSTER: u64 = 0x636c_7374; // "clst"
pub(crate) const DOMAIN_NETWORK: u64 = 0x6e65_7477; // "netw"

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for `(seed, domain, index)`.
pub fn substream(seed: u64, domain: u64, index: u64) -> SimRng {
    let key = mix64(mix64(seed ^ mix64(domain)) ^ index);
    ChaCha8Rng::seed_from_u64(key)
}

/// Per-vertex stream, keyed by the external vertex id.
pub fn vertex_stream(seed: u64, vertex_id: u32) -> SimRng {
    substream(seed, DOMAIN_VERTEX, u64::from(vertex_id))
}
