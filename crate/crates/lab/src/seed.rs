//! Per-trial seeds.

use sha2::{Digest, Sha256};

/// Seed of trial `i` at sample size `n`: the first eight bytes of
/// SHA-256 over the little-endian words `(base, n, i)`.
pub fn trial_seed(base: u64, n: usize, i: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update((n as u64).to_le_bytes());
    h.update((i as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}
