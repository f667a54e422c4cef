//! Deterministic random-number substreams.
//!
//! Work is keyed by `(seed, task, index)`: the seed and task label pick the
//! ChaCha key, the index picks the stream. Two different indices never share
//! a keystream, so chunked Monte-Carlo loops reproduce bit-for-bit no matter
//! how chunks are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Number of samples per Monte-Carlo chunk. Part of the reproducibility
/// contract: changing it changes every estimate.
pub const CHUNK_SIZE: usize = 2048;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn substream(seed: u64, task: &str, index: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(splitmix(seed ^ fnv1a(task.as_bytes())));
    rng.set_stream(index);
    rng
}

/// Fresh base seed drawn from a caller-provided generator.
pub fn draw_seed<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    rng.random()
}

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
