//! Seed derivation and ensemble execution.
//!
//! Path `i` of an ensemble with master seed `m` draws from a ChaCha8
//! generator keyed by `derive_seed(m, i, tag)`, one generator per `tag`
//! (clock, noise, initial delay). The key is four consecutive outputs of
//! splitmix64 started from
//!
//! ```text
//! mix(mix(mix(m) ^ i·0x9E37_79B9_7F4A_7C15) ^ tag·0xD1B5_4A32_D192_ED03)
//! ```
//!
//! where `mix` is the splitmix64 finalizer. Results therefore depend only
//! on `(m, i, tag)`, never on scheduling or on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const STREAM_CLOCK: u64 = 1;
pub const STREAM_NOISE: u64 = 2;
pub const STREAM_DELAY: u64 = 3;
pub const STREAM_AUX: u64 = 4;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 256-bit ChaCha key for substream `(master, index, tag)`.
pub fn derive_seed(master: u64, index: u64, tag: u64) -> [u8; 32] {
    let mut state = mix(mix(mix(master) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        ^ tag.wrapping_mul(0xD1B5_4A32_D192_ED03));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        chunk.copy_from_slice(&mix(state).to_le_bytes());
    }
    key
}

pub fn substream(master: u64, index: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_seed(master, index, tag))
}

/// Where a sampled object's randomness came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SeedRecord {
    pub master: u64,
    pub index: u64,
}

/// The disjoint generators one ensemble member draws from.
#[derive(Debug, Clone)]
pub struct PathStreams {
    pub clock: ChaCha8Rng,
    pub noise: ChaCha8Rng,
    pub delay: ChaCha8Rng,
    pub record: SeedRecord,
}

impl PathStreams {
    pub fn new(master: u64, index: u64) -> Self {
        Self {
            clock: substream(master, index, STREAM_CLOCK),
            noise: substream(master, index, STREAM_NOISE),
            delay: substream(master, index, STREAM_DELAY),
            record: SeedRecord { master, index },
        }
    }

    /// Streams keyed from an arbitrary generator, for one-off draws.
    pub fn from_rng<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let master = rng.random::<u64>();
        Self::new(master, 0)
    }
}

/// Runs `f(i, streams_i)` for `i in 0..n` on the current rayon pool and
/// returns the results in index order.
pub fn ensemble<T, F>(n: usize, master: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut PathStreams) -> Result<T> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut streams = PathStreams::new(master, i as u64);
            f(i, &mut streams)
        })
        .collect()
}
