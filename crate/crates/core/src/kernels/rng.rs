use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

/// Generator handed out by [`RngStream::rng`].
pub type StreamRng = Xoshiro256PlusPlus;

/// Key of an independent random stream.
///
/// The generator state is derived by hashing `(seed, stream_id)`, so a
/// stream can be reconstructed anywhere from its key alone. Trees derive
/// child keys from the parent key and the child index, which makes every
/// particle's draws independent of traversal order and worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> StreamRng {
        Xoshiro256PlusPlus::seed_from_u64(mix64(self.seed.wrapping_add(mix64(self.stream_id))))
    }

    /// Stream of the `index`-th child (or sub-task) of this one.
    pub fn child(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: mix64(self.stream_id ^ mix64(index.wrapping_add(0xd1b5_4a32_d192_ed03))),
        }
    }
}

/// SplitMix64 finalizer.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
