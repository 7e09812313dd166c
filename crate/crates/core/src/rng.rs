//! Named random streams.
//!
//! Every random draw in a run comes from a stream keyed by
//! `(master seed, purpose, index)`, usually with the epoch as the index.
//! Adding draws to one purpose never shifts the values seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Downsample = 1,
    Anneal = 2,
    Shuffle = 3,
    ModelInit = 4,
    Synthetic = 5,
    StaticSubset = 6,
    DynamicSubset = 7,
    MeanLossPrune = 8,
}

/// Returns the stream for `(seed, purpose, index)`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    key[24..].copy_from_slice(b"seta-rng");
    ChaCha8Rng::from_seed(key)
}
