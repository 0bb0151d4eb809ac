//! Deterministic seed derivation for parallel replication.
//!
//! Every experiment takes a single root seed.  Replicate `i` runs on an RNG
//! seeded with `derive_seed(root, i)`, so replicates are independent streams
//! and the result of a parallel map does not depend on scheduling: the
//! aggregation step always sees replicate `i` at index `i`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive the seed for a tagged subtask of `root`.
///
/// The derivation hashes `(root, index)` with SHA-256 and takes the first
/// eight bytes, so distinct indices collide with probability ~2^-64 per
/// pair regardless of how structured the inputs are (sequential indices,
/// equal roots, ...).
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

/// The RNG used throughout the crate, seeded from a derived seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stable 64-bit content hash of a byte string (first eight bytes of
/// SHA-256).  Used for cache keys; hex-format it for file names.
pub fn content_hash(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}
