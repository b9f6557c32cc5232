//! Counter-style noise streams.
//!
//! Every draw is keyed by `(master_seed, timestep, purpose)`. A ChaCha8 key is
//! derived from the master seed and purpose, and the timestep selects the
//! ChaCha stream, so any timestep's noise can be regenerated without replaying
//! earlier ones. Skipped chains therefore see exactly the noise a full chain
//! would have seen at the same level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::grid::{LatentGrid, Shape};

/// What a noise stream is used for. Distinct purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    /// ε of the forward process, `add_noise`.
    Forward,
    /// Fresh noise injected by ancestral reverse steps.
    Reverse,
    /// Synthetic data generation (datasets, fixtures).
    Data,
}

impl Purpose {
    pub fn tag(self) -> &'static str {
        match self {
            Purpose::Forward => "forward",
            Purpose::Reverse => "reverse",
            Purpose::Data => "data",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Independent seed for the `index`-th sub-run (measurement pair, pass...).
    pub fn child(self, index: u64) -> SeedSpec {
        let mut state = self.master_seed ^ 0xA076_1D64_78BD_642F;
        let a = splitmix64(&mut state);
        let mut state = a ^ index.wrapping_mul(0xE703_7ED1_A0B4_28DB);
        SeedSpec::new(splitmix64(&mut state))
    }

    /// The RNG for `(self, stream, purpose)`.
    pub fn stream(self, stream: u64, purpose: Purpose) -> ChaCha8Rng {
        let mut state = self.master_seed ^ fnv1a(purpose.tag());
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Standard-normal grid for `(seed, t, purpose)`. Pure: same inputs, same bits.
pub fn derive_noise(seed: SeedSpec, t: usize, purpose: Purpose, shape: Shape) -> LatentGrid {
    let mut rng = seed.stream(t as u64, purpose);
    let data = (0..shape.len())
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    LatentGrid::from_raw(shape.width, shape.height, shape.channels, data)
}
