//! Seed derivation.
//!
//! Every random decision is a function of a master seed plus a purpose tag
//! and indices, so results never depend on iteration order or on how work is
//! split across threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Purpose tags keep streams for different uses independent.
#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub(crate) enum Purpose {
    EdgeSample = 1,
    Placement = 2,
    ReduceEdge = 3,
    Louvain = 4,
    Trial = 5,
    Landscape = 6,
    Hicode = 7,
}

fn key(master: u64, purpose: Purpose, index: u64) -> [u8; 32] {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&master.to_le_bytes());
    bytes[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    bytes[16..24].copy_from_slice(&index.to_le_bytes());
    bytes
}

/// A generator for one `(master, purpose, index)` triple.
pub(crate) fn stream(master: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(key(master, purpose, index))
}

/// A child seed for task `index` of `purpose`.
pub(crate) fn derive(master: u64, purpose: Purpose, index: u64) -> u64 {
    stream(master, purpose, index).next_u64()
}

/// Uniform draws addressed by an unordered node pair: the value for `(u, v)`
/// is fixed by the seed alone, whichever order pairs are visited in.
pub(crate) struct PairUniform {
    rng: ChaCha8Rng,
}

impl PairUniform {
    pub(crate) fn new(master: u64, purpose: Purpose) -> Self {
        PairUniform {
            rng: stream(master, purpose, 0),
        }
    }

    /// Uniform in `[0, 1)` for the pair `u <= v`.
    pub(crate) fn draw(&mut self, u: usize, v: usize) -> f64 {
        self.rng.set_stream(u as u64);
        self.rng.set_word_pos(2 * v as u128);
        self.rng.random::<f64>()
    }
}
