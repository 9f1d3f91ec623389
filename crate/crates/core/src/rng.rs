//! Seeded random streams.
//!
//! A run has a single master seed. Every consumer (a drone's MAC backoff, a
//! link's packet draws, element placement, ...) gets its own ChaCha stream
//! keyed by SHA-256 of the seed and a stable label, so adding an entity never
//! shifts the draws seen by another one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

pub fn stream(seed: u64, label: &str) -> SimRng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    SimRng::from_seed(h.finalize().into())
}
