//! Deterministic random streams split from one master seed.
//!
//! A stream is addressed by `(purpose, replication, index)`. The first two
//! pick a ChaCha key, the index picks the ChaCha stream under that key, so any
//! stream can be reconstructed without touching the others. That is what
//! keeps parallel replications independent of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Instance = 1,
    Arms = 2,
    Rewards = 3,
    Policy = 4,
    Martingale = 5,
    Projection = 6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStreams {
    pub master: u64,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl SeedStreams {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn stream(&self, purpose: Purpose, replication: u64, index: u64) -> ChaCha8Rng {
        let key = splitmix(splitmix(splitmix(self.master) ^ purpose as u64) ^ replication);
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(index);
        rng
    }
}

/// Uniform draw from the sphere of the given radius in `R^d`.
pub fn random_on_sphere<R: Rng + ?Sized>(rng: &mut R, d: usize, radius: f64) -> Vector {
    loop {
        let v = Vector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let n = v.norm();
        if n > 1e-300 {
            return v * (radius / n);
        }
    }
}

/// Uniform draw from the closed ball of the given radius in `R^d`.
pub fn random_in_ball<R: Rng + ?Sized>(rng: &mut R, d: usize, radius: f64) -> Vector {
    let u: f64 = rng.random();
    random_on_sphere(rng, d, radius * u.powf(1.0 / d as f64))
}
