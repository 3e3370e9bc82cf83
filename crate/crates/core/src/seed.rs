//! Named, reproducible RNG streams derived from a single master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Named stream purposes used across the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Split,
    Mask,
    Train,
    Attack,
    Bootstrap,
    Noise,
    Generator,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Split => 0x5350_4c49_5400_0001,
            Stream::Mask => 0x4d41_534b_0000_0002,
            Stream::Train => 0x5452_4149_4e00_0003,
            Stream::Attack => 0x4154_5441_434b_0004,
            Stream::Bootstrap => 0x424f_4f54_0000_0005,
            Stream::Noise => 0x4e4f_4953_4500_0006,
            Stream::Generator => 0x4745_4e00_0000_0007,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a sequence of coordinates into a child seed.
///
/// Grid points and bootstrap resamples use this so that parallel and serial
/// execution draw from the same streams.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(master), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

pub fn stream_seed(master: u64, stream: Stream) -> u64 {
    derive_seed(master, &[stream.tag()])
}

pub fn rng_from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(master: u64, stream: Stream) -> StreamRng {
    rng_from_seed(stream_seed(master, stream))
}
