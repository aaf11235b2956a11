//! Per-replicate random streams.
//!
//! Every replicate of an experiment draws from its own stream, keyed by the
//! master seed and the replicate index. The key is avalanched with the
//! splitmix64 finalizer before seeding a ChaCha8 generator, so neighbouring
//! indices give unrelated streams and results never depend on which worker
//! picked up which replicate.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct RngStream {
    master_seed: u64,
    replicate_index: u64,
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(master_seed: u64, replicate_index: u64) -> Self {
        let key = splitmix64(master_seed ^ splitmix64(replicate_index.wrapping_mul(GOLDEN_GAMMA)));
        Self {
            master_seed,
            replicate_index,
            rng: ChaCha8Rng::seed_from_u64(key),
            spare_normal: None,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn replicate_index(&self) -> u64 {
        self.replicate_index
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Exponential variate with the given rate, by inversion.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -(1.0 - self.uniform()).ln() / rate
    }

    /// Standard normal variate (Marsaglia polar method).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * factor);
                return u * factor;
            }
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}
