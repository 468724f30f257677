//! Seeded randomness and stable seed derivation.
//!
//! Every random choice in the crate flows from an explicit `u64` seed so that
//! sessions, trees and protocol reports can be replayed bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Hashes a sequence of string parts into a `u64`, independent of platform
/// and process (unlike `std::hash`).
pub fn stable_hash<I, S>(parts: I) -> u64
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut hasher = Sha256::new();
    for part in parts {
        let bytes = part.as_ref();
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    }
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}

/// Derives a child seed from a master seed and a list of coordinates.
pub fn derive_seed(master: u64, coords: &[&str]) -> u64 {
    let master = master.to_le_bytes();
    stable_hash(std::iter::once(&master[..]).chain(coords.iter().map(|c| c.as_bytes())))
}
