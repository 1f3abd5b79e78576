//! Deterministic random streams.
//!
//! Every random decision draws from a ChaCha8 stream keyed by a master seed
//! and addressed by a stream id, so results do not depend on execution
//! order or thread count. The top byte of a stream id names its purpose and
//! the low 56 bits carry an index (resample number, trial number, ...).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INDEX_MASK: u64 = (1 << 56) - 1;

const KIND_SWAP: u64 = 1;
const KIND_TIE: u64 = 2;
const KIND_DATA: u64 = 3;
const KIND_TRIAL: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededRng {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeededRng {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    fn tagged(master_seed: u64, kind: u64, index: u64) -> Self {
        Self::new(master_seed, (kind << 56) | (index & INDEX_MASK))
    }

    /// Stream holding the per-pair swap coins of resample `resample_index`.
    pub fn swap_stream(master_seed: u64, resample_index: usize) -> Self {
        Self::tagged(master_seed, KIND_SWAP, resample_index as u64)
    }

    /// Stream holding the tie-break coins of the `τ` comparisons.
    pub fn tie_stream(master_seed: u64) -> Self {
        Self::tagged(master_seed, KIND_TIE, 0)
    }

    /// Stream used by the synthetic data generators.
    pub fn data_stream(seed: u64) -> Self {
        Self::tagged(seed, KIND_DATA, 0)
    }

    /// A fresh generator positioned at the start of the stream.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Fair coin stored at 32-bit word `index` of the stream.
    ///
    /// Random access: the same index always yields the same coin, regardless
    /// of which other coins were read.
    pub fn coin(&self, index: u64) -> bool {
        let mut rng = self.generator();
        rng.set_word_pos(u128::from(index));
        rng.next_u32() >> 31 == 1
    }

    /// The first `len` coins of the stream, coin `i` being word `i`.
    pub fn coins(&self, len: usize) -> Vec<bool> {
        let mut rng = self.generator();
        (0..len).map(|_| rng.next_u32() >> 31 == 1).collect()
    }
}

/// Seed for trial `trial` of a study driven by `master_seed`.
pub fn derive_seed(master_seed: u64, trial: usize) -> u64 {
    SeededRng::tagged(master_seed, KIND_TRIAL, trial as u64)
        .generator()
        .next_u64()
}
