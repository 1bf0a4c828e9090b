//! Counter-based random streams.
//!
//! Every random draw in a sweep comes from a ChaCha stream keyed by
//! `(master seed, point index, frame index, role)`. A stream depends only on
//! that tuple, never on how work was scheduled, so serial and parallel runs
//! produce identical samples.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// What a random stream is used for. Distinct roles never share samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    InfoBits = 1,
    Noise = 2,
    Interleaver = 3,
    TurboInterleaver = 4,
    Neighbors = 5,
    Padding = 6,
    Ase = 7,
    Estimator = 8,
}

/// Key of one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub master: u64,
    pub point: u64,
    pub frame: u64,
    pub role: Role,
}

impl StreamKey {
    pub fn new(master: u64, point: u64, frame: u64, role: Role) -> Self {
        Self {
            master,
            point,
            frame,
            role,
        }
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut state = self.master ^ 0x6a09_e667_f3bc_c908;
        let mut seed = [0u8; 32];
        let words = [self.point, self.frame, self.role as u64, 0x243f_6a88_85a3_08d3];
        for (chunk, word) in seed.chunks_exact_mut(8).zip(words) {
            state = splitmix64(state ^ word);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha12Rng::from_seed(seed)
    }
}

/// Stream for a one-off use that is not tied to a sweep point.
pub fn rng_for(seed: u64, role: Role) -> ChaCha12Rng {
    StreamKey::new(seed, u64::MAX, u64::MAX, role).rng()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
