//! Reproducible random streams.
//!
//! Every run has one 64-bit master seed. Independent tasks draw from ChaCha8
//! streams of that seed; the stream id packs the task coordinates as
//!
//! ```text
//! stream = tag << 48 | grid_index << 32 | replica_batch
//! ```
//!
//! where `tag` identifies the experiment kind, `grid_index` the sweep point
//! and `replica_batch` the batch of replicas handled by one work item.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Experiment tags used in the stream layout.
pub mod tag {
    pub const SAMPLE: u64 = 1;
    pub const COUPLE: u64 = 2;
    pub const HEATBATH: u64 = 3;
    pub const MAX_HEIGHT: u64 = 4;
    pub const TEST: u64 = 0xff;
}

pub fn stream_id(tag: u64, grid_index: u64, replica_batch: u64) -> u64 {
    debug_assert!(tag < 1 << 16 && grid_index < 1 << 16 && replica_batch < 1 << 32);
    tag << 48 | grid_index << 32 | replica_batch
}

/// ChaCha8 generator that remembers its seed and stream.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, seed, stream }
    }

    pub fn for_task(seed: u64, tag: u64, grid_index: u64, replica_batch: u64) -> Self {
        Self::new(seed, stream_id(tag, grid_index, replica_batch))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}
