//! Deterministic, splittable random streams.
//!
//! A stream is a `(seed, stream_id)` pair mapped onto ChaCha8 with the seed
//! as key material and the id as the ChaCha stream number, so distinct ids
//! under one seed never overlap. Child streams hash `(stream_id, parts…)`
//! with SplitMix64. Normal variates come from `rand_distr::StandardNormal`
//! (ziggurat); this choice is frozen because acceptance compares bytes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Child stream keyed by `parts`; independent of siblings with other keys.
    pub fn derive(&self, parts: &[u64]) -> Self {
        let mut h = splitmix64(self.stream_id);
        for &p in parts {
            h = splitmix64(h ^ splitmix64(p));
        }
        Self { seed: self.seed, stream_id: h }
    }

    pub fn generator(&self) -> Generator {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        Generator { rng }
    }
}

/// Live generator of one stream.
#[derive(Debug, Clone)]
pub struct Generator {
    rng: ChaCha8Rng,
}

impl Generator {
    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.rng.sample(StandardNormal);
        }
    }
}
