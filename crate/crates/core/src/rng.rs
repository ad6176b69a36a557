//! Counter-based random streams.
//!
//! Every random draw in an episode comes from a generator keyed by
//! `(seed, replication, period, purpose)`, so replications can run in any
//! order or in parallel and still reproduce a serial run exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    TypeDraw = 1,
    Dual = 2,
    Primal = 3,
    Saa = 4,
    Corruption = 5,
    Probe = 6,
    Calibration = 7,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub replication: u64,
    pub period: u64,
    pub purpose: Purpose,
}

impl StreamKey {
    pub fn new(seed: u64, replication: u64, period: u64, purpose: Purpose) -> Self {
        Self {
            seed,
            replication,
            period,
            purpose,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        stream(self.seed, self.replication, self.period, self.purpose)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for one `(seed, replication, period, purpose)` cell.
pub fn stream(seed: u64, replication: u64, period: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let words = [
        splitmix(seed),
        splitmix(replication ^ 0xA076_1D64_78BD_642F),
        splitmix(period ^ 0xE703_7ED1_A0B4_28DB),
        splitmix(purpose as u64 ^ 0x8EBC_6AF0_9C88_C6E3),
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
