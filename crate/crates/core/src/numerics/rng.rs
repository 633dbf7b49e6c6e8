use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Coordinates of an independent random stream under a master seed.
///
/// `walker` and `counter` are free-form tags; the ensemble uses the walker
/// index for per-walker streams and reserves high values for shared phases
/// (mixture fits, initialization).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub iteration: u64,
    pub walker: u64,
    pub counter: u64,
}

impl StreamKey {
    pub const fn new(iteration: u64, walker: u64, counter: u64) -> Self {
        Self {
            iteration,
            walker,
            counter,
        }
    }
}

/// A keyed, counter-based random stream.
///
/// The ChaCha8 key is the 32-byte concatenation of the master seed and the
/// three stream coordinates, so `(master_seed, key)` fully determines the
/// draw sequence no matter which thread consumes it or in what order
/// streams are created.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    key: StreamKey,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, key: StreamKey) -> Self {
        let mut seed = [0u8; 32];
        for (chunk, word) in seed.chunks_exact_mut(8).zip([
            master_seed,
            key.iteration,
            key.walker,
            key.counter,
        ]) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Self {
            master_seed,
            key,
            inner: ChaCha8Rng::from_seed(seed),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    /// Stream for a sibling key under the same master seed.
    pub fn derive(&self, key: StreamKey) -> Self {
        Self::new(self.master_seed, key)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
