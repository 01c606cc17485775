//! Seeded, splittable random streams.
//!
//! Every stream is a ChaCha8 generator whose key is derived from a 64-bit
//! seed and whose stream id selects one of 2^64 independent sequences.
//! Replicates derive their stream from `(seed, experiment, replicate)` so
//! results never depend on scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        let mut s = seed;
        for chunk in key.chunks_exact_mut(8) {
            s = mix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Stream for replicate `replicate` of experiment `experiment`.
    pub fn derive(seed: u64, experiment: u64, replicate: u64) -> Self {
        Self::with_stream(mix64(seed ^ mix64(experiment)), replicate)
    }

    /// Splits off an independent child stream, advancing `self`.
    pub fn fork(&mut self) -> Self {
        let seed = self.inner.next_u64();
        let stream = self.inner.next_u64();
        Self::with_stream(seed, stream)
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
