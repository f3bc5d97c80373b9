//! Deterministic seed derivation.
//!
//! All randomness in an experiment flows from one base seed through named
//! sub-streams (split, init, shuffle, ordering), so changing one knob never
//! perturbs the random choices of another. Derivation is hash-based and
//! therefore stable across platforms and releases of the RNG crates.

use sha2::{Digest, Sha256};

/// Seed for the named sub-stream of `base` in run `run`.
pub fn substream(base: u64, name: &str, run: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(name.as_bytes());
    hasher.update(run.to_le_bytes());
    first_u64(&hasher.finalize())
}

/// Hash-combines a list of values into one seed.
pub fn mix(parts: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.to_le_bytes());
    }
    first_u64(&hasher.finalize())
}

fn first_u64(digest: &[u8]) -> u64 {
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
