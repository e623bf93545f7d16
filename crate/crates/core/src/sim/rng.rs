//! Independent random streams keyed by seed, replication and purpose.
//!
//! Each stream is a ChaCha8 generator whose key packs the three identifiers,
//! so streams never overlap and do not depend on the order in which
//! replications run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Arrivals = 1,
    Services = 2,
    /// Choice between service and abandonment, and the abandoning job.
    Selection = 3,
    Initial = 4,
    Noise = 5,
}

pub fn stream(seed: u64, replication: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replication.to_le_bytes());
    key[16..24].copy_from_slice(&(purpose as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
