//! Deterministic random streams.
//!
//! Every run gets its own ChaCha8 stream keyed by `(master_seed, run_index)`:
//! the seed fixes the key and the run index selects the stream id, so streams
//! for different runs never overlap and reproduce bit-for-bit on any platform.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(master_seed: u64, run_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(run_index);
        Self(rng)
    }
}

/// See [`RngStream::new`].
pub fn derive_rng_stream(master_seed: u64, run_index: u64) -> RngStream {
    RngStream::new(master_seed, run_index)
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
