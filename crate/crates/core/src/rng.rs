//! Seeded randomness and trial-seed derivation.
//!
//! Every stochastic component draws from [`Rng`], a ChaCha8 stream seeded via
//! `SeedableRng::seed_from_u64`. ChaCha8 output is specified independently of
//! platform, so a seed reproduces the same run everywhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

/// Name reported by `--version`.
pub const PRNG_NAME: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64)";

/// Name of the hash used by [`derive_seed`].
pub const SEED_HASH_NAME: &str = "SHA-256, first 8 bytes little-endian";

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Trial seed for `(master, suite, algorithm, repeat)`.
///
/// The fields are hashed as `master:u64 LE || len:u64 LE || suite || len:u64 LE
/// || algorithm || repeat:u64 LE` so distinct tuples never share an encoding.
pub fn derive_seed(master: u64, suite_id: &str, algorithm: &str, repeat: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((suite_id.len() as u64).to_le_bytes());
    h.update(suite_id.as_bytes());
    h.update((algorithm.len() as u64).to_le_bytes());
    h.update(algorithm.as_bytes());
    h.update(repeat.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
